//! Flat JSON run configuration. Every key is optional; missing keys take
//! the published training setup.

use std::path::Path;

use anyhow::{Context, Result};
use cograph_core::{ModelConfig, TrainConfig, Variant};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input_dim: usize,
    pub gcn_dims: Vec<usize>,
    pub pooling_ratio: f64,
    pub fc_hidden: Vec<usize>,
    pub mu_init: f64,
    pub shared_mu: bool,
    pub score_gating: bool,
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub patience: usize,
    /// Seeds the data split, parameter init and shuffling.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let m = ModelConfig::default();
        let t = TrainConfig::default();
        RunConfig {
            input_dim: m.input_dim,
            gcn_dims: m.gcn_dims,
            pooling_ratio: m.pooling_ratio,
            fc_hidden: m.fc_hidden,
            mu_init: m.mu_init,
            shared_mu: m.shared_mu,
            score_gating: m.score_gating,
            batch_size: t.batch_size,
            lr: t.lr,
            weight_decay: t.weight_decay,
            max_epochs: t.max_epochs,
            patience: t.patience,
            seed: t.seed,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn model(&self, variant: Variant) -> ModelConfig {
        ModelConfig {
            input_dim: self.input_dim,
            gcn_dims: self.gcn_dims.clone(),
            pooling_ratio: self.pooling_ratio,
            fc_hidden: self.fc_hidden.clone(),
            mu_init: self.mu_init,
            shared_mu: self.shared_mu,
            score_gating: self.score_gating,
            variant,
        }
    }

    pub fn train(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            lr: self.lr,
            weight_decay: self.weight_decay,
            max_epochs: self.max_epochs,
            patience: self.patience,
            seed: self.seed,
        }
    }
}
