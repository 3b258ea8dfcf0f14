use super::{ClassifierModel, Params, TENSOR_NAMES};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// Max over all parameters of `|g_a − g_fd| / max(|g_a|, |g_fd|, 1e-8)`.
    pub max_relative_error: f64,
    /// Tensor and flat index where the maximum occurred.
    pub worst: (&'static str, usize),
    pub analytic: Params,
    pub numeric: Params,
}

/// Compares backpropagated gradients with central differences of step `h`
/// for every trainable parameter. The model must have dropout disabled.
pub fn gradient_check(model: &ClassifierModel, ids: &[u32], target: usize, h: f64) -> Result<GradCheckReport> {
    if model.config.dropout_level != 0.0 {
        return Err(Error::Config("gradient check requires dropout_level = 0".into()));
    }
    let (_, analytic) = model.gradients(ids, target)?;
    let mut probe = model.clone();
    let mut numeric = Params::zeros(&model.config);
    for t in 0..TENSOR_NAMES.len() {
        let n = probe.params.slices()[t].len();
        for k in 0..n {
            let orig = probe.params.slices()[t][k];
            probe.params.slices_mut()[t][k] = orig + h;
            let plus = probe.loss(ids, target)?;
            probe.params.slices_mut()[t][k] = orig - h;
            let minus = probe.loss(ids, target)?;
            probe.params.slices_mut()[t][k] = orig;
            numeric.slices_mut()[t][k] = (plus - minus) / (2.0 * h);
        }
    }

    let mut max_relative_error = 0.0;
    let mut worst = (TENSOR_NAMES[0], 0);
    for (t, (a, f)) in analytic.slices().iter().zip(numeric.slices()).enumerate() {
        for k in 0..a.len() {
            let denom = a[k].abs().max(f[k].abs()).max(1e-8);
            let rel = (a[k] - f[k]).abs() / denom;
            if rel > max_relative_error {
                max_relative_error = rel;
                worst = (TENSOR_NAMES[t], k);
            }
        }
    }
    Ok(GradCheckReport { max_relative_error, worst, analytic, numeric })
}
