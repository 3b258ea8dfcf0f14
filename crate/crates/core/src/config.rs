//! Run-wide settings, read from TOML. Unset keys take their defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baseline::LogRegConfig;
use crate::embedding::GloveConfig;
use crate::error::{Error, Result};
use crate::model::ClassifierConfig;
use crate::synth::SynthConfig;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub holdout_per_category: usize,
    pub per_category_count: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { holdout_per_category: 10, per_category_count: 600 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub split: SplitConfig,
    pub glove: GloveConfig,
    pub classifier: ClassifierConfig,
    pub baseline: LogRegConfig,
    pub synth: SynthConfig,
}

const MODULES: [&str; 4] = ["glove", "classifier", "baseline", "synth"];

impl RunConfig {
    /// Parses a run configuration. A top-level `seed` also seeds every
    /// module whose table does not set its own.
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut doc: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(seed) = doc.get("seed").cloned() {
            for section in MODULES {
                let entry = doc.entry(section).or_insert_with(|| toml::Value::Table(toml::Table::new()));
                if let Some(table) = entry.as_table_mut() {
                    table.entry("seed").or_insert_with(|| seed.clone());
                }
            }
        }
        toml::Value::Table(doc).try_into().map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Sets the run seed and copies it into every module.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.glove.seed = seed;
        self.classifier.seed = seed;
        self.baseline.seed = seed;
        self.synth.seed = seed;
        self
    }
}
