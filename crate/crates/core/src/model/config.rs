use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape and training settings of the convolutional-recurrent classifier.
///
/// Defaults are the tuned configuration: 250 filters of width 3 with stride 1,
/// pool size 2, 100 LSTM units, a 512-unit hidden layer with dropout 0.5,
/// sequences of 60 tokens over 100-dimensional embeddings, Adamax, and the
/// best of 3 epochs chosen on a 5% validation split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub seq_len: usize,
    pub embed_dims: usize,
    pub filters: usize,
    pub kernel_size: usize,
    pub strides: usize,
    pub pool_size: usize,
    pub lstm_units: usize,
    pub hidden_units: usize,
    pub dropout_level: f64,
    pub num_categories: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub validation_fraction: f64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            seq_len: 60,
            embed_dims: 100,
            filters: 250,
            kernel_size: 3,
            strides: 1,
            pool_size: 2,
            lstm_units: 100,
            hidden_units: 512,
            dropout_level: 0.5,
            num_categories: 2,
            epochs: 3,
            batch_size: 128,
            validation_fraction: 0.05,
            learning_rate: 0.002,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl ClassifierConfig {
    /// Rows of the convolution output.
    pub fn conv_len(&self) -> usize {
        (self.seq_len - self.kernel_size) / self.strides + 1
    }

    /// LSTM time steps after pooling.
    pub fn pooled_len(&self) -> usize {
        self.conv_len() / self.pool_size
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("seq_len", self.seq_len),
            ("embed_dims", self.embed_dims),
            ("filters", self.filters),
            ("kernel_size", self.kernel_size),
            ("strides", self.strides),
            ("pool_size", self.pool_size),
            ("lstm_units", self.lstm_units),
            ("hidden_units", self.hidden_units),
            ("num_categories", self.num_categories),
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v < 1) {
            return Err(Error::Config(format!("{name} must be at least 1")));
        }
        if self.seq_len < self.kernel_size {
            return Err(Error::Config(format!(
                "seq_len {} is shorter than kernel_size {}",
                self.seq_len, self.kernel_size
            )));
        }
        if self.pooled_len() < 1 {
            return Err(Error::Config("pooling leaves no time steps".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_level) {
            return Err(Error::Config(format!("dropout_level {} not in [0, 1)", self.dropout_level)));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::Config(format!(
                "validation_fraction {} not in [0, 1)",
                self.validation_fraction
            )));
        }
        if !(self.learning_rate > 0.0 && (0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return Err(Error::Config("invalid Adamax settings".into()));
        }
        Ok(())
    }
}
