//! Glue between the modules: vocabulary, embedding and classifier training,
//! the two function classifiers, and their checkpoints.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use serde_json::json;

use crate::baseline::{build_bow_features, predict_logreg, train_logreg, BowVocabulary, LinearModel, LogRegConfig};
use crate::checkpoint::Container;
use crate::config::RunConfig;
use crate::corpus::LabeledFunction;
use crate::embedding::{
    cooccurrence_for, embedding_sentences, encode_sentences, train_glove, EmbeddingMatrix, EmbeddingStrategy,
    GloveConfig, GloveOutcome,
};
use crate::error::{Error, Result};
use crate::evaluation::FunctionClassifier;
use crate::model::{fit, AdamaxState, ClassifierConfig, ClassifierModel, FitOutcome, FunctionExample, Params, TENSOR_NAMES};
use crate::prediction::Prediction;
use crate::repr::{build_representation, encode, Variant, Vocabulary};

pub const NEURAL_KIND: &str = "neural-classifier";
pub const BOW_KIND: &str = "bow-logreg";

/// Sorted distinct categories of a training set.
pub fn categories_of(train: &[LabeledFunction]) -> Vec<String> {
    let mut cats: Vec<String> = train.iter().map(|f| f.category.clone()).collect();
    cats.sort();
    cats.dedup();
    cats
}

/// Vocabulary over the code-description representations of the training
/// functions, so description words get ids too.
pub fn training_vocabulary(train: &[LabeledFunction]) -> Result<Vocabulary> {
    Vocabulary::build(
        train
            .iter()
            .map(|f| build_representation(&f.function, f.description.as_deref(), Variant::Cd)),
    )
}

/// GloVe vectors for every id of `vocab`.
pub fn train_embedding(
    train: &[LabeledFunction],
    vocab: &Vocabulary,
    strategy: EmbeddingStrategy,
    config: &GloveConfig,
) -> Result<GloveOutcome> {
    let sentences = encode_sentences(&embedding_sentences(train, strategy), vocab);
    let table = cooccurrence_for(&sentences, config)?;
    log::info!("co-occurrence table: {} cells over {} ids", table.len(), vocab.len());
    train_glove(&table, vocab.len(), config)
}

fn category_index(categories: &[String], name: &str) -> Result<usize> {
    categories
        .iter()
        .position(|c| c == name)
        .ok_or_else(|| Error::UnknownCategory(name.to_string()))
}

/// Code-only and code-description encodings of every training function.
pub fn function_examples(
    train: &[LabeledFunction],
    vocab: &Vocabulary,
    categories: &[String],
    seq_len: usize,
) -> Result<Vec<FunctionExample>> {
    train
        .iter()
        .map(|f| {
            let desc = f.description.as_deref();
            Ok(FunctionExample {
                project: f.function.project_name.clone(),
                label: category_index(categories, &f.category)?,
                co: encode(&build_representation(&f.function, desc, Variant::Co), vocab, seq_len)?,
                cd: encode(&build_representation(&f.function, desc, Variant::Cd), vocab, seq_len)?,
            })
        })
        .collect()
}

/// Convolutional-recurrent model with the vocabulary and category names it
/// was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuralClassifier {
    pub model: ClassifierModel,
    pub vocab: Vocabulary,
    pub categories: Vec<String>,
}

/// Fits a neural classifier on both encodings of `train`. The category count
/// in `config` is replaced by the one found in the data.
pub fn train_neural(
    train: &[LabeledFunction],
    vocab: Vocabulary,
    embedding: Arc<EmbeddingMatrix>,
    config: &ClassifierConfig,
) -> Result<(NeuralClassifier, FitOutcome)> {
    let categories = categories_of(train);
    let config = ClassifierConfig { num_categories: categories.len(), ..config.clone() };
    if embedding.vocab_size() != vocab.len() {
        return Err(Error::Shape(format!(
            "embedding has {} rows, vocabulary {} tokens",
            embedding.vocab_size(),
            vocab.len()
        )));
    }
    let examples = function_examples(train, &vocab, &categories, config.seq_len)?;
    let model = ClassifierModel::new(config.clone(), embedding, config.seed)?;
    let outcome = fit(model, &examples)?;
    let classifier = NeuralClassifier { model: outcome.model.clone(), vocab, categories };
    Ok((classifier, outcome))
}

impl FunctionClassifier for NeuralClassifier {
    fn categories(&self) -> &[String] {
        &self.categories
    }

    fn predict_tokens(&self, tokens: &[String]) -> Result<Prediction> {
        self.model.predict(&self.encode(tokens)?)
    }
}

impl NeuralClassifier {
    pub fn encode(&self, tokens: &[String]) -> Result<Vec<u32>> {
        encode(tokens, &self.vocab, self.model.config.seq_len)
    }

    /// Post-ReLU convolution activations for a token sequence.
    pub fn explain(&self, tokens: &[String]) -> Result<Array2<f64>> {
        self.model.conv_activations(&self.encode(tokens)?)
    }

    pub fn to_container(&self, run: &RunConfig) -> Result<Container> {
        let m = &self.model;
        let mut c = Container::new(
            NEURAL_KIND,
            json!({
                "config": m.config,
                "seed": m.config.seed,
                "categories": self.categories,
                "vocab": &self.vocab.tokens()[2..],
                "vocab_hash": self.vocab.hash(),
                "optimizer_step": m.optimizer.step,
                "run_config": run,
            }),
        );
        let emb = m.embedding().as_array();
        c.push("embedding", emb.shape().to_vec(), emb.iter().copied().collect());
        for (prefix, params) in [("", &m.params), ("adamax_m.", &m.optimizer.m), ("adamax_u.", &m.optimizer.u)] {
            for ((name, shape), data) in TENSOR_NAMES.iter().zip(params.shapes()).zip(params.slices()) {
                c.push(format!("{prefix}{name}"), shape, data.to_vec());
            }
        }
        Ok(c)
    }

    pub fn from_container(c: &Container) -> Result<(Self, RunConfig)> {
        if c.kind != NEURAL_KIND {
            return Err(Error::Checkpoint(format!("expected a {NEURAL_KIND} checkpoint, found {}", c.kind)));
        }
        let config: ClassifierConfig = c.meta_field("config")?;
        let categories: Vec<String> = c.meta_field("categories")?;
        let vocab = Vocabulary::from_tokens(c.meta_field::<Vec<String>>("vocab")?)?;
        if vocab.hash() != c.meta_field::<String>("vocab_hash")? {
            return Err(Error::Checkpoint("vocabulary hash mismatch".into()));
        }
        let emb = c.get("embedding")?;
        let embedding = EmbeddingMatrix::from_array(to_array2(&emb.shape, &emb.data)?)?;
        let read_params = |prefix: &str| -> Result<Params> {
            let mut p = Params::zeros(&config);
            let shapes = p.shapes();
            for ((name, slot), shape) in TENSOR_NAMES.iter().zip(p.slices_mut()).zip(shapes) {
                let a = c.get(&format!("{prefix}{name}"))?;
                if a.shape != shape {
                    return Err(Error::Checkpoint(format!("array '{prefix}{name}' has shape {:?}", a.shape)));
                }
                slot.copy_from_slice(&a.data);
            }
            Ok(p)
        };
        let mut model = ClassifierModel::with_params(config.clone(), Arc::new(embedding), read_params("")?)?;
        model.optimizer = AdamaxState {
            m: read_params("adamax_m.")?,
            u: read_params("adamax_u.")?,
            step: c.meta_field("optimizer_step")?,
        };
        if categories.len() != config.num_categories {
            return Err(Error::Checkpoint("category list does not match the output layer".into()));
        }
        if vocab.len() != model.embedding().vocab_size() {
            return Err(Error::Checkpoint("vocabulary does not match the embedding".into()));
        }
        let run: RunConfig = c.meta_field("run_config")?;
        Ok((NeuralClassifier { model, vocab, categories }, run))
    }

    pub fn save(&self, path: &Path, run: &RunConfig) -> Result<()> {
        self.to_container(run)?.save(path)
    }

    pub fn load(path: &Path) -> Result<(Self, RunConfig)> {
        Self::from_container(&Container::load(path)?)
    }
}

fn to_array2(shape: &[usize], data: &[f64]) -> Result<Array2<f64>> {
    match shape {
        &[r, c] => Array2::from_shape_vec((r, c), data.to_vec()).map_err(|e| Error::Checkpoint(e.to_string())),
        other => Err(Error::Checkpoint(format!("expected a matrix, found shape {other:?}"))),
    }
}

/// Convolution activations as CSV: one row per window, one column per
/// filter, led by the window's start position and its tokens.
pub fn heatmap_csv(activations: &Array2<f64>, tokens: &[String], kernel_size: usize) -> String {
    let mut out = String::from("window,tokens");
    for f in 0..activations.ncols() {
        let _ = write!(out, ",f{f}");
    }
    out.push('\n');
    for (r, row) in activations.rows().into_iter().enumerate() {
        let window: Vec<&str> = (r..r + kernel_size)
            .map(|i| tokens.get(i).map(String::as_str).unwrap_or(crate::repr::PAD_TOKEN))
            .collect();
        let _ = write!(out, "{r},{}", window.join(" "));
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// Window whose activations sum highest; earliest on ties.
pub fn strongest_window(activations: &Array2<f64>) -> Option<usize> {
    let totals: Vec<f64> = activations.rows().into_iter().map(|r| r.sum()).collect();
    let mut best: Option<usize> = None;
    for (i, &t) in totals.iter().enumerate() {
        if best.is_none_or(|b| t > totals[b]) {
            best = Some(i);
        }
    }
    best
}

/// Bag-of-words logistic regression over the same (truncated) function
/// representations the neural model sees.
#[derive(Debug, Clone, PartialEq)]
pub struct BowClassifier {
    pub vocab: BowVocabulary,
    pub model: LinearModel,
    pub categories: Vec<String>,
    pub seq_len: usize,
}

/// Trains on both encodings of every training function.
pub fn train_bow(train: &[LabeledFunction], config: &LogRegConfig, seq_len: usize) -> Result<BowClassifier> {
    let categories = categories_of(train);
    let mut docs = Vec::with_capacity(2 * train.len());
    let mut labels = Vec::with_capacity(2 * train.len());
    for f in train {
        let label = category_index(&categories, &f.category)?;
        for variant in [Variant::Co, Variant::Cd] {
            let mut tokens = build_representation(&f.function, f.description.as_deref(), variant);
            tokens.truncate(seq_len);
            docs.push(tokens);
            labels.push(label);
        }
    }
    let vocab = BowVocabulary::build(docs.iter(), config.vocab_size)?;
    let features: Vec<_> = docs.iter().map(|d| build_bow_features(d, &vocab)).collect();
    let model = train_logreg(&features, &labels, categories.len(), config)?;
    Ok(BowClassifier { vocab, model, categories, seq_len })
}

impl FunctionClassifier for BowClassifier {
    fn categories(&self) -> &[String] {
        &self.categories
    }

    fn predict_tokens(&self, tokens: &[String]) -> Result<Prediction> {
        let kept = &tokens[..tokens.len().min(self.seq_len)];
        predict_logreg(&self.model, &build_bow_features(kept, &self.vocab))
    }
}

impl BowClassifier {
    pub fn to_container(&self, run: &RunConfig) -> Container {
        let mut c = Container::new(
            BOW_KIND,
            json!({
                "config": run.baseline,
                "seed": run.baseline.seed,
                "categories": self.categories,
                "seq_len": self.seq_len,
                "bow_vocab": self.vocab.tokens(),
                "run_config": run,
            }),
        );
        c.push("weights", self.model.weights.shape().to_vec(), self.model.weights.iter().copied().collect());
        c.push("bias", vec![self.model.bias.len()], self.model.bias.to_vec());
        c
    }

    pub fn from_container(c: &Container) -> Result<(Self, RunConfig)> {
        if c.kind != BOW_KIND {
            return Err(Error::Checkpoint(format!("expected a {BOW_KIND} checkpoint, found {}", c.kind)));
        }
        let vocab = BowVocabulary::from_tokens(c.meta_field("bow_vocab")?)?;
        let categories: Vec<String> = c.meta_field("categories")?;
        let w = c.get("weights")?;
        let weights = to_array2(&w.shape, &w.data)?;
        let bias = Array1::from(c.get("bias")?.data.clone());
        if weights.nrows() != vocab.len() || weights.ncols() != categories.len() || bias.len() != categories.len() {
            return Err(Error::Checkpoint("weights do not match vocabulary and categories".into()));
        }
        let classifier = BowClassifier {
            vocab,
            model: LinearModel { weights, bias },
            categories,
            seq_len: c.meta_field("seq_len")?,
        };
        Ok((classifier, c.meta_field("run_config")?))
    }

    pub fn save(&self, path: &Path, run: &RunConfig) -> Result<()> {
        self.to_container(run).save(path)
    }

    pub fn load(path: &Path) -> Result<(Self, RunConfig)> {
        Self::from_container(&Container::load(path)?)
    }
}

/// Either kind of trained classifier, as stored on disk.
#[allow(clippy::large_enum_variant)]
pub enum AnyClassifier {
    Neural(NeuralClassifier),
    Bow(BowClassifier),
}

impl AnyClassifier {
    pub fn load(path: &Path) -> Result<(Self, RunConfig)> {
        let c = Container::load(path)?;
        match c.kind.as_str() {
            NEURAL_KIND => NeuralClassifier::from_container(&c).map(|(m, r)| (AnyClassifier::Neural(m), r)),
            BOW_KIND => BowClassifier::from_container(&c).map(|(m, r)| (AnyClassifier::Bow(m), r)),
            other => Err(Error::Checkpoint(format!("unknown checkpoint kind '{other}'"))),
        }
    }

    pub fn as_classifier(&self) -> &dyn FunctionClassifier {
        match self {
            AnyClassifier::Neural(m) => m,
            AnyClassifier::Bow(m) => m,
        }
    }
}
