//! Train every variant under identical splits and seeds and tabulate test
//! metrics.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::PairedSample;
use crate::model::{Model, ModelConfig, Variant};
use crate::rng;
use crate::train::{evaluate, train, TrainConfig};

#[derive(Debug, Clone)]
pub struct Splits {
    pub train: Vec<PairedSample>,
    pub val: Vec<PairedSample>,
    pub test: Vec<PairedSample>,
}

/// Seeded 80/10/10 split. The remainder after the training share is halved
/// with the extra sample going to validation.
pub fn split_dataset(samples: &[PairedSample], seed: u64) -> Splits {
    let n = samples.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, "split"));
    let n_train = (libm::round(n as f64 * 0.8) as usize).clamp(n.min(1), n);
    let rest = n - n_train;
    let n_val = rest.div_ceil(2);
    let pick = |idx: &[usize]| idx.iter().map(|&i| samples[i].clone()).collect();
    Splits {
        train: pick(&order[..n_train]),
        val: pick(&order[n_train..n_train + n_val]),
        test: pick(&order[n_train + n_val..]),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub test_logloss: f64,
    pub test_accuracy: f64,
    pub val_logloss: f64,
    pub val_accuracy: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonCell {
    pub variant: Variant,
    pub seed: u64,
    pub result: core::result::Result<CellMetrics, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub variant: Variant,
    /// Cells that finished without error.
    pub runs: usize,
    pub mean_accuracy: f64,
    pub sd_accuracy: f64,
    pub mean_logloss: f64,
    pub sd_logloss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub cells: Vec<ComparisonCell>,
    pub summary: Vec<VariantSummary>,
}

impl ComparisonTable {
    pub fn summary_for(&self, variant: Variant) -> Option<&VariantSummary> {
        self.summary.iter().find(|s| s.variant == variant)
    }
}

/// Mean and sample standard deviation (zero for fewer than two values).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, libm::sqrt(var))
}

fn run_cell(
    splits: &Splits,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    seed: u64,
) -> Result<CellMetrics> {
    let mut model = Model::new(model_cfg.clone(), seed)?;
    let cfg = TrainConfig {
        seed,
        ..train_cfg.clone()
    };
    let outcome = train(&mut model, &splits.train, &splits.val, &cfg)?;
    let test = evaluate(&model, &splits.test)?;
    let best = outcome.best();
    Ok(CellMetrics {
        test_logloss: test.logloss,
        test_accuracy: test.accuracy,
        val_logloss: best.val_logloss,
        val_accuracy: best.val_accuracy,
        best_epoch: outcome.best_epoch,
        epochs_run: outcome.history.len() - 1,
    })
}

/// Trains each `(variant, seed)` cell. A failing cell records its error and
/// the table carries on.
pub fn run_comparison(
    splits: &Splits,
    variants: &[Variant],
    seeds: &[u64],
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
) -> ComparisonTable {
    let mut cells = Vec::with_capacity(variants.len() * seeds.len());
    let mut summary = Vec::with_capacity(variants.len());
    for &variant in variants {
        let cfg = model_cfg.with_variant(variant);
        let (mut accs, mut losses) = (Vec::new(), Vec::new());
        for &seed in seeds {
            let result = run_cell(splits, &cfg, train_cfg, seed).map_err(|e| e.to_string());
            match &result {
                Ok(m) => {
                    log::info!(
                        "{variant} seed {seed}: test acc {:.4} logloss {:.4}",
                        m.test_accuracy,
                        m.test_logloss
                    );
                    accs.push(m.test_accuracy);
                    losses.push(m.test_logloss);
                }
                Err(e) => log::warn!("{variant} seed {seed} failed: {e}"),
            }
            cells.push(ComparisonCell {
                variant,
                seed,
                result,
            });
        }
        let (mean_accuracy, sd_accuracy) = mean_sd(&accs);
        let (mean_logloss, sd_logloss) = mean_sd(&losses);
        summary.push(VariantSummary {
            variant,
            runs: accs.len(),
            mean_accuracy,
            sd_accuracy,
            mean_logloss,
            sd_logloss,
        });
    }
    ComparisonTable { cells, summary }
}
