//! Metric outputs: JSON summaries, history CSV and the comparison table.

use std::fmt::Write;

use cograph_core::compare::ComparisonTable;
use cograph_core::EpochRecord;
use serde::{Deserialize, Serialize};

pub const HISTORY_HEADER: &str = "epoch,train_logloss,val_logloss,val_accuracy";

pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut out = String::from(HISTORY_HEADER);
    out.push('\n');
    for r in history {
        writeln!(out, "{},{},{},{}", r.epoch, r.train_logloss, r.val_logloss, r.val_accuracy).unwrap();
    }
    out
}

/// Printed by `train` once the best epoch is restored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub variant: String,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub val_logloss: f64,
    pub val_accuracy: f64,
    pub train_samples: usize,
    pub val_samples: usize,
    pub test_samples: usize,
}

/// Fixed-width text rendering of the per-variant summary.
pub fn comparison_text(table: &ComparisonTable) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:<20} {:>4} {:>9} {:>8} {:>9} {:>8}",
        "variant", "runs", "acc_mean", "acc_sd", "loss_mean", "loss_sd"
    )
    .unwrap();
    for s in &table.summary {
        writeln!(
            out,
            "{:<20} {:>4} {:>9.4} {:>8.4} {:>9.4} {:>8.4}",
            s.variant.name(),
            s.runs,
            s.mean_accuracy,
            s.sd_accuracy,
            s.mean_logloss,
            s.sd_logloss
        )
        .unwrap();
    }
    for c in &table.cells {
        if let Err(e) = &c.result {
            writeln!(out, "! {} seed {}: {e}", c.variant, c.seed).unwrap();
        }
    }
    out
}
