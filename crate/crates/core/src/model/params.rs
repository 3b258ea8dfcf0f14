use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ClassifierConfig;

/// Names of the trainable tensors, in storage order.
pub const TENSOR_NAMES: [&str; 9] = [
    "conv_w", "conv_b", "lstm_wx", "lstm_wh", "lstm_b", "hidden_w", "hidden_b", "out_w", "out_b",
];

/// Trainable parameters (and, reusing the layout, gradients and optimizer
/// moments).
///
/// LSTM gate blocks are ordered input, forget, cell, output; each block is
/// `lstm_units` wide. The convolution kernel is flattened so that row
/// `k * embed_dims + e` multiplies embedding dimension `e` of the `k`-th token
/// in the window.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    /// `(kernel_size * embed_dims) × filters`
    pub conv_w: Array2<f64>,
    pub conv_b: Array1<f64>,
    /// `filters × 4·lstm_units`
    pub lstm_wx: Array2<f64>,
    /// `lstm_units × 4·lstm_units`
    pub lstm_wh: Array2<f64>,
    pub lstm_b: Array1<f64>,
    /// `lstm_units × hidden_units`
    pub hidden_w: Array2<f64>,
    pub hidden_b: Array1<f64>,
    /// `hidden_units × num_categories`
    pub out_w: Array2<f64>,
    pub out_b: Array1<f64>,
}

impl Params {
    pub fn zeros(c: &ClassifierConfig) -> Self {
        let h4 = 4 * c.lstm_units;
        Params {
            conv_w: Array2::zeros((c.kernel_size * c.embed_dims, c.filters)),
            conv_b: Array1::zeros(c.filters),
            lstm_wx: Array2::zeros((c.filters, h4)),
            lstm_wh: Array2::zeros((c.lstm_units, h4)),
            lstm_b: Array1::zeros(h4),
            hidden_w: Array2::zeros((c.lstm_units, c.hidden_units)),
            hidden_b: Array1::zeros(c.hidden_units),
            out_w: Array2::zeros((c.hidden_units, c.num_categories)),
            out_b: Array1::zeros(c.num_categories),
        }
    }

    /// Glorot-uniform weights, zero biases except a forget-gate bias of one.
    pub fn glorot(c: &ClassifierConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Params::zeros(c);
        let mut fill = |a: &mut Array2<f64>, fan_in: usize, fan_out: usize| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            a.mapv_inplace(|_| rng.random_range(-limit..limit));
        };
        let k = c.kernel_size;
        fill(&mut p.conv_w, k * c.embed_dims, k * c.filters);
        fill(&mut p.lstm_wx, c.filters, 4 * c.lstm_units);
        fill(&mut p.lstm_wh, c.lstm_units, 4 * c.lstm_units);
        fill(&mut p.hidden_w, c.lstm_units, c.hidden_units);
        fill(&mut p.out_w, c.hidden_units, c.num_categories);
        p.lstm_b
            .slice_mut(ndarray::s![c.lstm_units..2 * c.lstm_units])
            .fill(1.0);
        p
    }

    pub fn slices(&self) -> [&[f64]; 9] {
        let s = "parameters are kept in standard layout";
        [
            self.conv_w.as_slice().expect(s),
            self.conv_b.as_slice().expect(s),
            self.lstm_wx.as_slice().expect(s),
            self.lstm_wh.as_slice().expect(s),
            self.lstm_b.as_slice().expect(s),
            self.hidden_w.as_slice().expect(s),
            self.hidden_b.as_slice().expect(s),
            self.out_w.as_slice().expect(s),
            self.out_b.as_slice().expect(s),
        ]
    }

    pub fn slices_mut(&mut self) -> [&mut [f64]; 9] {
        let s = "parameters are kept in standard layout";
        [
            self.conv_w.as_slice_mut().expect(s),
            self.conv_b.as_slice_mut().expect(s),
            self.lstm_wx.as_slice_mut().expect(s),
            self.lstm_wh.as_slice_mut().expect(s),
            self.lstm_b.as_slice_mut().expect(s),
            self.hidden_w.as_slice_mut().expect(s),
            self.hidden_b.as_slice_mut().expect(s),
            self.out_w.as_slice_mut().expect(s),
            self.out_b.as_slice_mut().expect(s),
        ]
    }

    pub fn shapes(&self) -> [Vec<usize>; 9] {
        [
            self.conv_w.shape().to_vec(),
            self.conv_b.shape().to_vec(),
            self.lstm_wx.shape().to_vec(),
            self.lstm_wh.shape().to_vec(),
            self.lstm_b.shape().to_vec(),
            self.hidden_w.shape().to_vec(),
            self.hidden_b.shape().to_vec(),
            self.out_w.shape().to_vec(),
            self.out_b.shape().to_vec(),
        ]
    }

    pub fn len(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn fill(&mut self, v: f64) {
        for s in self.slices_mut() {
            s.fill(v);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.slices()
            .iter()
            .flat_map(|s| s.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}
