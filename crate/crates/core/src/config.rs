//! Run configuration loaded from TOML. Every section is optional and falls
//! back to defaults; command-line flags override what the file says.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::AugmentConfig;
use crate::encoder::EncoderConfig;
use crate::eval::CloneEvalConfig;
use crate::tokenizer::TokenizerConfig;
use crate::trainer::TrainConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Unsupervised,
    SupervisedClone,
    SupervisedClassify,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub snippets: Option<PathBuf>,
    pub pairs: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

/// Encoder shape; the vocabulary size comes from the trained vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub n_layers: usize,
    pub d_model: usize,
    pub n_heads: usize,
    pub ffn_dim: Option<usize>,
    pub max_relative_distance: usize,
    pub mlp_dims: Option<Vec<usize>>,
    pub max_sequence_length: usize,
    pub relative_values: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let e = EncoderConfig::default();
        ModelConfig {
            n_layers: e.n_layers,
            d_model: e.d_model,
            n_heads: e.n_heads,
            ffn_dim: None,
            max_relative_distance: e.max_relative_distance,
            mlp_dims: None,
            max_sequence_length: e.max_sequence_length,
            relative_values: e.relative_values,
        }
    }
}

impl ModelConfig {
    pub fn encoder(&self, vocab_size: usize) -> EncoderConfig {
        let mut e = EncoderConfig::new(vocab_size, self.d_model, self.n_heads, self.n_layers);
        if let Some(f) = self.ffn_dim {
            e.ffn_dim = f;
        }
        if let Some(m) = &self.mlp_dims {
            e.mlp_dims = m.clone();
        }
        e.max_relative_distance = self.max_relative_distance;
        e.max_sequence_length = self.max_sequence_length;
        e.relative_values = self.relative_values;
        e
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub paths: Paths,
    pub augment: AugmentConfig,
    pub tokenizer: TokenizerConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub eval: CloneEvalConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|message| ConfigError::Parse {
            path: path.to_path_buf(),
            message,
        })
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// A single seed drives augmentation and training unless either section
    /// sets its own.
    pub fn apply_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.augment.rng_seed = seed;
        self.train.seed = seed;
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.augment
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.train.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.eval.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.model
            .encoder(1)
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }
}
