//! GloVe-style word embeddings trained on functions, with left-context
//! windows and optional project descriptions prepended to every function.

mod cooccur;
mod glove;
mod matrix;

pub use cooccur::{build_cooccurrence, CooccurrenceTable};
pub use glove::{train_glove, GloveConfig, GloveModel, GloveOutcome};
pub use matrix::{cosine, load_embedding_text, nearest_neighbors, read_embedding_text, EmbeddingMatrix};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::LabeledFunction;
use crate::error::{Error, Result};
use crate::repr::{build_representation, tokenize, Variant, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingStrategy {
    CodeOnly,
    CodeDescription,
}

impl fmt::Display for EmbeddingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EmbeddingStrategy::CodeOnly => "code-only",
            EmbeddingStrategy::CodeDescription => "code-description",
        })
    }
}

impl FromStr for EmbeddingStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "code-only" => Ok(EmbeddingStrategy::CodeOnly),
            "code-description" => Ok(EmbeddingStrategy::CodeDescription),
            other => Err(Error::Config(format!(
                "unknown embedding strategy '{other}' (expected code-only or code-description)"
            ))),
        }
    }
}

/// One sentence per training function. With [`EmbeddingStrategy::CodeDescription`]
/// the project description comes first, so its words sit in the left context
/// of every code token.
pub fn embedding_sentences(functions: &[LabeledFunction], strategy: EmbeddingStrategy) -> Vec<Vec<String>> {
    functions
        .iter()
        .map(|f| {
            let code = build_representation(&f.function, None, Variant::Co);
            match (strategy, f.description.as_deref()) {
                (EmbeddingStrategy::CodeDescription, Some(desc)) => {
                    let mut s = tokenize(desc);
                    s.extend(code);
                    s
                }
                _ => code,
            }
        })
        .collect()
}

pub fn encode_sentences(sentences: &[Vec<String>], vocab: &Vocabulary) -> Vec<Vec<u32>> {
    sentences
        .iter()
        .map(|s| s.iter().map(|t| vocab.id_or_unk(t)).collect())
        .collect()
}

/// Co-occurrence table with the window and weighting of `config`.
pub fn cooccurrence_for(sentences: &[Vec<u32>], config: &GloveConfig) -> Result<CooccurrenceTable> {
    config.validate()?;
    Ok(build_cooccurrence(sentences, config.window, config.distance_weighting))
}
