//! Convolutional-recurrent function classifier.
//!
//! Each function is a fixed-length id sequence. Ids are looked up in a frozen
//! embedding, convolved (valid padding, ReLU), max-pooled, fed through an
//! LSTM whose final hidden state goes to a ReLU dense layer with dropout and a
//! softmax output. Training minimizes categorical cross-entropy with Adamax.

mod config;
mod gradcheck;
mod network;
mod optimizer;
mod params;
mod train;

pub use config::ClassifierConfig;
pub use gradcheck::{gradient_check, GradCheckReport};
pub use optimizer::AdamaxState;
pub use params::{Params, TENSOR_NAMES};
pub use train::{fit, select_best_epoch, validation_project_count, FitOutcome, FunctionExample};

use std::sync::Arc;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::prediction::Prediction;

/// Activations of every layer for one sequence.
#[derive(Debug, Clone)]
pub struct LayerActivations {
    /// Post-ReLU convolution, `conv_len × filters`.
    pub conv: Array2<f64>,
    /// `pooled_len × filters`
    pub pooled: Array2<f64>,
    /// Final LSTM hidden state.
    pub lstm: Array1<f64>,
    /// Dense hidden layer after ReLU (and dropout when training).
    pub hidden: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    pub config: ClassifierConfig,
    embedding: Arc<EmbeddingMatrix>,
    pub params: Params,
    pub optimizer: AdamaxState,
}

impl ClassifierModel {
    /// Glorot-initialized model over a frozen embedding.
    pub fn new(config: ClassifierConfig, embedding: Arc<EmbeddingMatrix>, seed: u64) -> Result<Self> {
        let params = Params::glorot(&config, seed);
        Self::with_params(config, embedding, params)
    }

    pub fn with_params(config: ClassifierConfig, embedding: Arc<EmbeddingMatrix>, params: Params) -> Result<Self> {
        config.validate()?;
        if embedding.dims() != config.embed_dims {
            return Err(Error::Shape(format!(
                "embedding has {} dims, config expects {}",
                embedding.dims(),
                config.embed_dims
            )));
        }
        if embedding.vocab_size() < 2 {
            return Err(Error::Shape("embedding must hold the reserved pad and unk rows".into()));
        }
        let expected = Params::zeros(&config).shapes();
        if params.shapes() != expected {
            return Err(Error::Shape("parameter shapes do not match the configuration".into()));
        }
        let optimizer = AdamaxState::new(&config);
        Ok(ClassifierModel { config, embedding, params, optimizer })
    }

    pub fn embedding(&self) -> &EmbeddingMatrix {
        &self.embedding
    }

    pub fn shared_embedding(&self) -> Arc<EmbeddingMatrix> {
        Arc::clone(&self.embedding)
    }

    fn check(&self, ids: &[u32]) -> Result<()> {
        network::check_ids(&self.config, self.embedding.vocab_size(), ids)
    }

    /// Inference: dropout off, a pure function of the model and `ids`.
    pub fn predict(&self, ids: &[u32]) -> Result<Prediction> {
        self.check(ids)?;
        let trace = network::forward::<ChaCha8Rng>(
            &self.config,
            &self.params,
            self.embedding.as_array(),
            ids,
            None,
        );
        Ok(Prediction::new(trace.probs))
    }

    /// Full forward pass. Dropout is applied only when `dropout` supplies a
    /// random source.
    pub fn forward<R: Rng + ?Sized>(&self, ids: &[u32], dropout: Option<&mut R>) -> Result<(Prediction, LayerActivations)> {
        self.check(ids)?;
        let emb = self.embedding.as_array();
        let trace = network::forward(&self.config, &self.params, emb, ids, dropout);
        let acts = trace.activations();
        Ok((Prediction::new(trace.probs), acts))
    }

    /// Cross-entropy of one sequence with dropout off.
    pub fn loss(&self, ids: &[u32], target: usize) -> Result<f64> {
        self.check(ids)?;
        self.check_target(target)?;
        let trace = network::forward::<ChaCha8Rng>(
            &self.config,
            &self.params,
            self.embedding.as_array(),
            ids,
            None,
        );
        Ok(network::loss(&trace, target))
    }

    /// Loss and analytic gradient of one sequence with dropout off.
    pub fn gradients(&self, ids: &[u32], target: usize) -> Result<(f64, Params)> {
        self.check(ids)?;
        self.check_target(target)?;
        let trace = network::forward::<ChaCha8Rng>(
            &self.config,
            &self.params,
            self.embedding.as_array(),
            ids,
            None,
        );
        let mut grads = Params::zeros(&self.config);
        network::backward(&self.config, &self.params, &trace, target, 1.0, &mut grads);
        Ok((network::loss(&trace, target), grads))
    }

    fn check_target(&self, target: usize) -> Result<()> {
        if target >= self.config.num_categories {
            return Err(Error::Shape(format!(
                "label {target} outside {} categories",
                self.config.num_categories
            )));
        }
        Ok(())
    }

    /// One Adamax step on the mean cross-entropy of `batch`. Dropout masks are
    /// drawn from `rng`. Nothing is updated if the loss or any gradient is not
    /// finite.
    pub fn train_step<R: Rng + ?Sized>(&mut self, batch: &[(&[u32], usize)], rng: &mut R) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::Empty("training batch".into()));
        }
        for (ids, target) in batch {
            self.check(ids)?;
            self.check_target(*target)?;
        }
        let scale = 1.0 / batch.len() as f64;
        let mut grads = Params::zeros(&self.config);
        let mut total = 0.0;
        let emb = self.embedding.as_array();
        for (ids, target) in batch {
            let trace = network::forward(&self.config, &self.params, emb, ids, Some(&mut *rng));
            total += network::loss(&trace, *target);
            network::backward(&self.config, &self.params, &trace, *target, scale, &mut grads);
        }
        let mean = total * scale;
        if !mean.is_finite() {
            return Err(Error::NonFinite(format!("training loss is {mean}")));
        }
        if !grads.all_finite() {
            return Err(Error::NonFinite("gradient has non-finite entries".into()));
        }
        self.optimizer.apply(&self.config, &mut self.params, &grads);
        Ok(mean)
    }

    /// Post-ReLU convolution outputs; row `r` is the window starting at token
    /// `r · strides`.
    pub fn conv_activations(&self, ids: &[u32]) -> Result<Array2<f64>> {
        self.check(ids)?;
        Ok(network::conv_activations(&self.config, &self.params, self.embedding.as_array(), ids))
    }
}
