use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CooccurrenceTable, EmbeddingMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GloveConfig {
    /// Left-context window, in tokens.
    pub window: usize,
    pub dims: usize,
    pub x_max: f64,
    pub alpha: f64,
    pub learning_rate: f64,
    pub iterations: usize,
    pub seed: u64,
    pub distance_weighting: bool,
}

impl Default for GloveConfig {
    fn default() -> Self {
        GloveConfig {
            window: 200,
            dims: 100,
            x_max: 100.0,
            alpha: 0.75,
            learning_rate: 0.05,
            iterations: 25,
            seed: 0,
            distance_weighting: true,
        }
    }
}

impl GloveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 1 {
            return Err(Error::Config("glove window must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!("glove alpha {} not in (0, 1]", self.alpha)));
        }
        if self.dims < 1 {
            return Err(Error::Config("glove dims must be at least 1".into()));
        }
        if !(self.x_max > 0.0 && self.learning_rate > 0.0) {
            return Err(Error::Config("glove x_max and learning_rate must be positive".into()));
        }
        Ok(())
    }

    fn weight(&self, x: f64) -> f64 {
        if x < self.x_max {
            (x / self.x_max).powf(self.alpha)
        } else {
            1.0
        }
    }
}

/// Trainable GloVe state: main and context vectors, their biases and the
/// AdaGrad accumulators. Ids 0 and 1 are never trained and stay zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GloveModel {
    config: GloveConfig,
    main: Array2<f64>,
    context: Array2<f64>,
    main_bias: Vec<f64>,
    context_bias: Vec<f64>,
    main_sq: Array2<f64>,
    context_sq: Array2<f64>,
    main_bias_sq: Vec<f64>,
    context_bias_sq: Vec<f64>,
}

impl GloveModel {
    /// Uniform initialization in `±0.5 / dims`, accumulators at one.
    pub fn new(vocab_size: usize, config: &GloveConfig) -> Result<Self> {
        config.validate()?;
        let d = config.dims;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut init = |rows: usize, cols: usize| {
            Array2::from_shape_fn((rows, cols), |(i, _)| {
                let v = (rng.random::<f64>() - 0.5) / d as f64;
                if i < 2 {
                    0.0
                } else {
                    v
                }
            })
        };
        let main = init(vocab_size, d);
        let context = init(vocab_size, d);
        let biases = init(vocab_size, 2);
        Ok(GloveModel {
            config: config.clone(),
            main,
            context,
            main_bias: biases.column(0).to_vec(),
            context_bias: biases.column(1).to_vec(),
            main_sq: Array2::ones((vocab_size, d)),
            context_sq: Array2::ones((vocab_size, d)),
            main_bias_sq: vec![1.0; vocab_size],
            context_bias_sq: vec![1.0; vocab_size],
        })
    }

    fn trainable(&self, i: u32, j: u32) -> bool {
        i >= 2 && j >= 2 && (i as usize) < self.main.nrows() && (j as usize) < self.main.nrows()
    }

    fn residual(&self, i: usize, j: usize, x: f64) -> f64 {
        self.main.row(i).dot(&self.context.row(j)) + self.main_bias[i] + self.context_bias[j] - x.ln()
    }

    /// Mean weighted squared error `f(X_ij) (w_i·w̃_j + b_i + b̃_j − ln X_ij)²`
    /// over trainable cells.
    pub fn loss(&self, table: &CooccurrenceTable) -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for (i, j, x) in table.entries() {
            if !self.trainable(i, j) {
                continue;
            }
            let r = self.residual(i as usize, j as usize, x);
            sum += self.config.weight(x) * r * r;
            n += 1;
        }
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }

    /// One AdaGrad pass over `cells` in the given order. Returns the mean
    /// weighted squared error accumulated before each update.
    pub fn run_epoch(&mut self, cells: &[(u32, u32, f64)]) -> Result<f64> {
        let d = self.config.dims;
        let lr = self.config.learning_rate;
        let mut grad_main = vec![0.0; d];
        let mut grad_context = vec![0.0; d];
        let mut sum = 0.0;
        let mut n = 0usize;
        for &(i, j, x) in cells {
            if !self.trainable(i, j) {
                continue;
            }
            let (i, j) = (i as usize, j as usize);
            let r = self.residual(i, j, x);
            let fr = self.config.weight(x) * r;
            if !fr.is_finite() {
                return Err(Error::NonFinite(format!("glove residual for cell ({i},{j}) is {r}")));
            }
            sum += fr * r;
            n += 1;

            {
                let wi = self.main.row(i);
                let wj = self.context.row(j);
                for k in 0..d {
                    grad_main[k] = fr * wj[k];
                    grad_context[k] = fr * wi[k];
                }
            }
            let mut wi = self.main.row_mut(i);
            let mut si = self.main_sq.row_mut(i);
            for k in 0..d {
                wi[k] -= lr * grad_main[k] / si[k].sqrt();
                si[k] += grad_main[k] * grad_main[k];
            }
            let mut wj = self.context.row_mut(j);
            let mut sj = self.context_sq.row_mut(j);
            for k in 0..d {
                wj[k] -= lr * grad_context[k] / sj[k].sqrt();
                sj[k] += grad_context[k] * grad_context[k];
            }
            self.main_bias[i] -= lr * fr / self.main_bias_sq[i].sqrt();
            self.main_bias_sq[i] += fr * fr;
            self.context_bias[j] -= lr * fr / self.context_bias_sq[j].sqrt();
            self.context_bias_sq[j] += fr * fr;
        }
        let mean = if n == 0 { 0.0 } else { sum / n as f64 };
        if !mean.is_finite() {
            return Err(Error::NonFinite(format!("glove epoch loss is {mean}")));
        }
        Ok(mean)
    }

    /// Published vectors `w + w̃`.
    pub fn published(&self) -> EmbeddingMatrix {
        EmbeddingMatrix::from_array(&self.main + &self.context).expect("finite by construction")
    }
}

#[derive(Debug, Clone)]
pub struct GloveOutcome {
    pub embedding: EmbeddingMatrix,
    /// Mean loss of each pass, in order.
    pub losses: Vec<f64>,
    pub model: GloveModel,
}

/// Fits GloVe vectors to a co-occurrence table. Cells are visited in a fresh
/// seeded shuffle every pass.
pub fn train_glove(table: &CooccurrenceTable, vocab_size: usize, config: &GloveConfig) -> Result<GloveOutcome> {
    if table.is_empty() {
        return Err(Error::Empty("co-occurrence table".into()));
    }
    let mut model = GloveModel::new(vocab_size, config)?;
    let mut cells = table.entries();
    if let Some(&(i, j, _)) = cells.iter().find(|&&(i, j, _)| i as usize >= vocab_size || j as usize >= vocab_size) {
        return Err(Error::Shape(format!("cell ({i},{j}) outside vocabulary of {vocab_size}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut losses = Vec::with_capacity(config.iterations);
    for it in 0..config.iterations {
        cells.shuffle(&mut rng);
        let loss = model.run_epoch(&cells)?;
        log::debug!("glove iteration {}: loss {loss:.6}", it + 1);
        losses.push(loss);
    }
    Ok(GloveOutcome { embedding: model.published(), losses, model })
}
