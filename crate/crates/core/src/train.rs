//! Mini-batch training with Adam, early stopping on validation logloss, and
//! evaluation metrics.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{batch_graphs, GraphBatch, PairedSample};
use crate::model::Model;
use crate::optim::{Adam, AdamConfig, Param};
use crate::rng;
use crate::tape::Tape;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            lr: 0.001,
            weight_decay: 1e-6,
            max_epochs: 100,
            patience: 10,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Validation("batch_size must be at least 1".into()));
        }
        if self.patience == 0 {
            return Err(Error::Validation("patience must be at least 1".into()));
        }
        if [self.lr, self.weight_decay].iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(Error::Validation("lr and weight_decay must be nonnegative".into()));
        }
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            weight_decay: self.weight_decay,
            ..AdamConfig::default()
        }
    }
}

/// One row of the training history. Epoch 0 is the untrained model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_logloss: f64,
    pub val_logloss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    pub logloss: f64,
    pub accuracy: f64,
    pub history: Vec<EpochRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    /// Epoch whose parameters were restored.
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
}

impl TrainOutcome {
    /// Metrics of the restored epoch.
    pub fn best(&self) -> &EpochRecord {
        &self.history[self.best_epoch]
    }
}

/// Image and text batches for a set of samples, in the given order.
pub fn collate(samples: &[&PairedSample]) -> Result<(GraphBatch, GraphBatch, Vec<usize>)> {
    let images: Vec<_> = samples.iter().map(|s| &s.image_graph).collect();
    let texts: Vec<_> = samples.iter().map(|s| &s.text_graph).collect();
    let labels = samples.iter().map(|s| s.label()).collect();
    Ok((batch_graphs(&images)?, batch_graphs(&texts)?, labels))
}

const EVAL_BATCH: usize = 64;

/// `(mean logloss, accuracy)` of `[B×2]` logits against labels.
/// Predictions are `argmax`, ties going to class 0.
pub fn score_logits(logits: &[f64], labels: &[usize]) -> (f64, usize) {
    let mut loss = 0.0;
    let mut correct = 0;
    for (row, &label) in logits.chunks(2).zip(labels) {
        let max = row[0].max(row[1]);
        let lse = max + libm::log(libm::exp(row[0] - max) + libm::exp(row[1] - max));
        loss += lse - row[label];
        let pred = usize::from(row[1] > row[0]);
        correct += usize::from(pred == label);
    }
    (loss, correct)
}

/// Logloss and accuracy over a dataset. Deterministic.
pub fn evaluate(model: &Model, data: &[PairedSample]) -> Result<MetricsReport> {
    if data.is_empty() {
        return Err(Error::Validation("cannot evaluate on an empty dataset".into()));
    }
    let mut loss = 0.0;
    let mut correct = 0;
    for chunk in data.chunks(EVAL_BATCH) {
        let refs: Vec<_> = chunk.iter().collect();
        let (img, txt, labels) = collate(&refs)?;
        let logits = model.predict(&img, &txt)?;
        let (l, c) = score_logits(logits.data(), &labels);
        loss += l;
        correct += c;
    }
    Ok(MetricsReport {
        logloss: loss / data.len() as f64,
        accuracy: correct as f64 / data.len() as f64,
        history: Vec::new(),
    })
}

/// Trains `model` in place and restores the parameters of the epoch with the
/// lowest validation logloss (ties keep the earlier epoch).
pub fn train(
    model: &mut Model,
    train_set: &[PairedSample],
    val_set: &[PairedSample],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::Validation(
            "training and validation sets must be nonempty".into(),
        ));
    }
    let mut adam = Adam::new(cfg.adam(), model.params());
    let mut shuffle_rng = rng::stream(cfg.seed, "train.shuffle");
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut tape = Tape::new();

    let initial_val = evaluate(model, val_set)?;
    let mut history = alloc::vec![EpochRecord {
        epoch: 0,
        train_logloss: evaluate(model, train_set)?.logloss,
        val_logloss: initial_val.logloss,
        val_accuracy: initial_val.accuracy,
    }];
    let mut best_epoch = 0;
    let mut best_loss = initial_val.logloss;
    let mut best_params: Vec<Param> = model.params().to_vec();
    let mut stale = 0;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for (bi, idx) in order.chunks(cfg.batch_size).enumerate() {
            let refs: Vec<_> = idx.iter().map(|&i| &train_set[i]).collect();
            let (img, txt, labels) = collate(&refs)?;
            tape.clear();
            let bound = model.bind(&mut tape);
            let logits = model.logits(&mut tape, &bound, &img, &txt)?;
            let loss = tape.softmax_cross_entropy(logits, &labels)?;
            let value = tape.value(loss).item();
            if !value.is_finite() {
                return Err(Error::Divergence { epoch, batch: bi });
            }
            epoch_loss += value * labels.len() as f64;
            tape.backward(loss)?;
            model.collect_grads(&tape, &bound);
            adam.step(model.params_mut())?;
        }
        let val = evaluate(model, val_set)?;
        let record = EpochRecord {
            epoch,
            train_logloss: epoch_loss / train_set.len() as f64,
            val_logloss: val.logloss,
            val_accuracy: val.accuracy,
        };
        log::debug!(
            "epoch {epoch}: train {:.5} val {:.5} acc {:.4}",
            record.train_logloss,
            record.val_logloss,
            record.val_accuracy
        );
        history.push(record);
        if val.logloss < best_loss {
            best_loss = val.logloss;
            best_epoch = epoch;
            best_params.clone_from_slice(model.params());
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                log::info!("early stop at epoch {epoch}, best epoch {best_epoch}");
                break;
            }
        }
    }
    for (p, best) in model.params_mut().iter_mut().zip(best_params) {
        p.tensor = best.tensor;
    }
    if !history[best_epoch].val_logloss.is_finite() {
        return Err(Error::Contract(format!(
            "no epoch produced a finite validation loss ({} epochs)",
            history.len() - 1
        )));
    }
    Ok(TrainOutcome {
        best_epoch,
        history,
    })
}
