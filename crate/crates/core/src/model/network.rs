//! Forward and backward passes of the embedding → convolution → max-pool →
//! LSTM → dense → softmax network for a single sequence.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use rand::Rng;

use super::{ClassifierConfig, LayerActivations, Params};
use crate::error::{Error, Result};
use crate::prediction::softmax;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Intermediate values kept for backpropagation.
pub(crate) struct Trace {
    /// `conv_len × (kernel_size·embed_dims)` stacked token windows.
    windows: Array2<f64>,
    /// Convolution pre-activations, `conv_len × filters`.
    conv_pre: Array2<f64>,
    /// `pooled_len × filters`
    pooled: Array2<f64>,
    /// Convolution row that won each pooling cell, row-major over `pooled`.
    pool_src: Vec<usize>,
    /// Activated gates per step, `pooled_len × 4H`.
    gates: Array2<f64>,
    /// Row `t + 1` holds the cell state after step `t`; row 0 is zero.
    cells: Array2<f64>,
    /// Same layout as `cells` for hidden states.
    hiddens: Array2<f64>,
    hidden_pre: Array1<f64>,
    /// Hidden activations after ReLU and dropout.
    hidden_out: Array1<f64>,
    /// Inverted-dropout multipliers, when training.
    mask: Option<Array1<f64>>,
    pub(crate) probs: Vec<f64>,
}

impl Trace {
    pub(crate) fn activations(&self) -> LayerActivations {
        LayerActivations {
            conv: self.conv_pre.mapv(|v| v.max(0.0)),
            pooled: self.pooled.clone(),
            lstm: self.hiddens.row(self.hiddens.nrows() - 1).to_owned(),
            hidden: self.hidden_out.clone(),
        }
    }
}

pub(crate) fn check_ids(config: &ClassifierConfig, vocab_size: usize, ids: &[u32]) -> Result<()> {
    if ids.len() != config.seq_len {
        return Err(Error::Shape(format!(
            "sequence has {} ids, model expects {}",
            ids.len(),
            config.seq_len
        )));
    }
    if let Some(&bad) = ids.iter().find(|&&i| i as usize >= vocab_size) {
        return Err(Error::Shape(format!("id {bad} outside vocabulary of {vocab_size}")));
    }
    Ok(())
}

fn windows(config: &ClassifierConfig, embedding: &Array2<f64>, ids: &[u32]) -> Array2<f64> {
    let e = config.embed_dims;
    let rows = config.conv_len();
    let mut w = Array2::zeros((rows, config.kernel_size * e));
    for r in 0..rows {
        for k in 0..config.kernel_size {
            let id = ids[r * config.strides + k] as usize;
            w.slice_mut(s![r, k * e..(k + 1) * e]).assign(&embedding.row(id));
        }
    }
    w
}

/// Post-ReLU convolution output, `conv_len × filters`.
pub(crate) fn conv_activations(
    config: &ClassifierConfig,
    params: &Params,
    embedding: &Array2<f64>,
    ids: &[u32],
) -> Array2<f64> {
    let mut z = windows(config, embedding, ids).dot(&params.conv_w);
    z += &params.conv_b;
    z.mapv_inplace(|v| v.max(0.0));
    z
}

pub(crate) fn forward<R: Rng + ?Sized>(
    config: &ClassifierConfig,
    params: &Params,
    embedding: &Array2<f64>,
    ids: &[u32],
    dropout: Option<&mut R>,
) -> Trace {
    let h = config.lstm_units;
    let f_count = config.filters;

    let windows = windows(config, embedding, ids);
    let mut conv_pre = windows.dot(&params.conv_w);
    conv_pre += &params.conv_b;

    let steps = config.pooled_len();
    let p = config.pool_size;
    let mut pooled = Array2::zeros((steps, f_count));
    let mut pool_src = vec![0usize; steps * f_count];
    for t in 0..steps {
        for f in 0..f_count {
            let mut best_row = t * p;
            let mut best = conv_pre[[best_row, f]].max(0.0);
            for q in 1..p {
                let v = conv_pre[[t * p + q, f]].max(0.0);
                if v > best {
                    best = v;
                    best_row = t * p + q;
                }
            }
            pooled[[t, f]] = best;
            pool_src[t * f_count + f] = best_row;
        }
    }

    let mut gx = pooled.dot(&params.lstm_wx);
    gx += &params.lstm_b;
    let mut gates = Array2::zeros((steps, 4 * h));
    let mut cells = Array2::<f64>::zeros((steps + 1, h));
    let mut hiddens = Array2::zeros((steps + 1, h));
    for t in 0..steps {
        let pre = &gx.row(t) + &hiddens.row(t).dot(&params.lstm_wh);
        let mut g = gates.row_mut(t);
        for j in 0..h {
            let i_g = sigmoid(pre[j]);
            let f_g = sigmoid(pre[h + j]);
            let c_g = pre[2 * h + j].tanh();
            let o_g = sigmoid(pre[3 * h + j]);
            g[j] = i_g;
            g[h + j] = f_g;
            g[2 * h + j] = c_g;
            g[3 * h + j] = o_g;
            let c: f64 = f_g * cells[[t, j]] + i_g * c_g;
            cells[[t + 1, j]] = c;
            hiddens[[t + 1, j]] = o_g * c.tanh();
        }
    }

    let mut hidden_pre = hiddens.row(steps).dot(&params.hidden_w);
    hidden_pre += &params.hidden_b;
    let mut hidden_out = hidden_pre.mapv(|v| v.max(0.0));
    let mask = dropout.filter(|_| config.dropout_level > 0.0).map(|rng| {
        let keep = 1.0 - config.dropout_level;
        let m: Array1<f64> = (0..config.hidden_units)
            .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
            .collect();
        hidden_out *= &m;
        m
    });

    let mut logits = hidden_out.dot(&params.out_w);
    logits += &params.out_b;
    let probs = softmax(logits.as_slice().expect("contiguous"));

    Trace {
        windows,
        conv_pre,
        pooled,
        pool_src,
        gates,
        cells,
        hiddens,
        hidden_pre,
        hidden_out,
        mask,
        probs,
    }
}

/// Cross-entropy of the trace against a class index.
pub(crate) fn loss(trace: &Trace, target: usize) -> f64 {
    -trace.probs[target].max(f64::MIN_POSITIVE).ln()
}

fn outer_into(grad: &mut Array2<f64>, scale: f64, left: ArrayView1<'_, f64>, right: ArrayView1<'_, f64>) {
    let l = left.insert_axis(Axis(1));
    let r = right.insert_axis(Axis(0));
    general_mat_mul(scale, &l, &r, 1.0, grad);
}

/// Adds `scale ·` ∂loss/∂params for one sequence into `grads`. The embedding
/// receives no gradient.
pub(crate) fn backward(
    config: &ClassifierConfig,
    params: &Params,
    trace: &Trace,
    target: usize,
    scale: f64,
    grads: &mut Params,
) {
    let h = config.lstm_units;
    let steps = config.pooled_len();
    let f_count = config.filters;

    let mut d_logits = Array1::from(trace.probs.clone());
    d_logits[target] -= 1.0;
    outer_into(&mut grads.out_w, scale, trace.hidden_out.view(), d_logits.view());
    grads.out_b.scaled_add(scale, &d_logits);

    let mut d_hidden = params.out_w.dot(&d_logits);
    if let Some(mask) = &trace.mask {
        d_hidden *= mask;
    }
    for (d, &pre) in d_hidden.iter_mut().zip(trace.hidden_pre.iter()) {
        if pre <= 0.0 {
            *d = 0.0;
        }
    }
    outer_into(&mut grads.hidden_w, scale, trace.hiddens.row(steps), d_hidden.view());
    grads.hidden_b.scaled_add(scale, &d_hidden);

    let mut dh = params.hidden_w.dot(&d_hidden);
    let mut dc = Array1::<f64>::zeros(h);
    let mut d_gates = Array2::<f64>::zeros((steps, 4 * h));
    for t in (0..steps).rev() {
        let g = trace.gates.row(t);
        {
            let mut dg = d_gates.row_mut(t);
            for j in 0..h {
                let (i_g, f_g, c_g, o_g) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
                let c = trace.cells[[t + 1, j]];
                let c_prev = trace.cells[[t, j]];
                let tc = c.tanh();
                let d_o = dh[j] * tc;
                let dcj = dc[j] + dh[j] * o_g * (1.0 - tc * tc);
                dg[j] = dcj * c_g * i_g * (1.0 - i_g);
                dg[h + j] = dcj * c_prev * f_g * (1.0 - f_g);
                dg[2 * h + j] = dcj * i_g * (1.0 - c_g * c_g);
                dg[3 * h + j] = d_o * o_g * (1.0 - o_g);
                dc[j] = dcj * f_g;
            }
        }
        dh = params.lstm_wh.dot(&d_gates.row(t));
    }
    general_mat_mul(scale, &trace.pooled.t(), &d_gates, 1.0, &mut grads.lstm_wx);
    general_mat_mul(
        scale,
        &trace.hiddens.slice(s![..steps, ..]).t(),
        &d_gates,
        1.0,
        &mut grads.lstm_wh,
    );
    grads.lstm_b.scaled_add(scale, &d_gates.sum_axis(Axis(0)));

    let d_pooled = d_gates.dot(&params.lstm_wx.t());
    let mut d_conv = Array2::<f64>::zeros(trace.conv_pre.raw_dim());
    for t in 0..steps {
        for f in 0..f_count {
            let src = trace.pool_src[t * f_count + f];
            if trace.conv_pre[[src, f]] > 0.0 {
                d_conv[[src, f]] += d_pooled[[t, f]];
            }
        }
    }
    general_mat_mul(scale, &trace.windows.t(), &d_conv, 1.0, &mut grads.conv_w);
    grads.conv_b.scaled_add(scale, &d_conv.sum_axis(Axis(0)));
}
