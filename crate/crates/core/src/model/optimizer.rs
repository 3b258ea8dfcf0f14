use super::{ClassifierConfig, Params};

/// Adamax state: first moments, infinity-norm accumulators, step count.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamaxState {
    pub m: Params,
    pub u: Params,
    pub step: u64,
}

impl AdamaxState {
    pub fn new(config: &ClassifierConfig) -> Self {
        AdamaxState {
            m: Params::zeros(config),
            u: Params::zeros(config),
            step: 0,
        }
    }

    /// `m ← β1·m + (1−β1)·g`, `u ← max(β2·u, |g|)`,
    /// `θ ← θ − lr/(1−β1^t) · m/(u+ε)`.
    pub fn apply(&mut self, config: &ClassifierConfig, params: &mut Params, grads: &Params) {
        self.step += 1;
        let (b1, b2, eps) = (config.beta1, config.beta2, config.epsilon);
        let lr_t = config.learning_rate / (1.0 - b1.powi(self.step.min(i32::MAX as u64) as i32));
        let ps = params.slices_mut();
        let gs = grads.slices();
        let ms = self.m.slices_mut();
        let us = self.u.slices_mut();
        for (((p, g), m), u) in ps.into_iter().zip(gs).zip(ms).zip(us) {
            for k in 0..p.len() {
                m[k] = b1 * m[k] + (1.0 - b1) * g[k];
                u[k] = (b2 * u[k]).max(g[k].abs());
                p[k] -= lr_t * m[k] / (u[k] + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ClassifierConfig {
        ClassifierConfig {
            seq_len: 6,
            embed_dims: 2,
            filters: 2,
            lstm_units: 2,
            hidden_units: 3,
            num_categories: 2,
            ..Default::default()
        }
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let c = tiny();
        let mut p = Params::glorot(&c, 3);
        let before = p.clone();
        let mut opt = AdamaxState::new(&c);
        opt.apply(&c, &mut p, &Params::zeros(&c));
        assert_eq!(p, before);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // With m̂ = g and u = |g|, the first step is lr·sign(g) up to ε.
        let c = tiny();
        let mut p = Params::zeros(&c);
        let mut g = Params::zeros(&c);
        g.out_b[0] = 0.3;
        g.out_b[1] = -2.0;
        let mut opt = AdamaxState::new(&c);
        opt.apply(&c, &mut p, &g);
        assert!((p.out_b[0] + 0.002).abs() < 1e-9);
        assert!((p.out_b[1] - 0.002).abs() < 1e-9);
        assert_eq!(opt.step, 1);
    }
}
