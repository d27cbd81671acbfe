mod common;

use cograph_core::train::{collate, score_logits};
use cograph_core::{evaluate, train, Error, Model, ModelConfig, TrainConfig, Variant};
use common::random_samples;

#[test]
fn single_sample_is_memorized() {
    let data = random_samples(31, 1, 256);
    let mut model = Model::new(ModelConfig::default(), 1).unwrap();
    let cfg = TrainConfig { max_epochs: 200, patience: 200, ..TrainConfig::default() };
    let out = train(&mut model, &data, &data, &cfg).unwrap();
    let final_loss = evaluate(&model, &data).unwrap().logloss;
    assert!(final_loss < 0.01, "logloss {final_loss} after {} epochs", out.history.len() - 1);
}

#[test]
fn zero_learning_rate_keeps_parameters() {
    let data = random_samples(32, 10, 16);
    let mcfg = ModelConfig { input_dim: 16, ..ModelConfig::default() };
    let mut model = Model::new(mcfg, 2).unwrap();
    let before = model.params().to_vec();
    let cfg = TrainConfig { lr: 0.0, weight_decay: 0.0, max_epochs: 3, batch_size: 4, ..TrainConfig::default() };
    train(&mut model, &data[..7], &data[7..], &cfg).unwrap();
    for (a, b) in before.iter().zip(model.params()) {
        assert_eq!(a.tensor.data(), b.tensor.data(), "{}", a.name);
    }
}

#[test]
fn evaluate_agrees_with_per_sample_oracle() {
    let data = random_samples(33, 150, 16);
    let mcfg = ModelConfig { input_dim: 16, ..ModelConfig::default() };
    for variant in Variant::ALL {
        let model = Model::new(mcfg.with_variant(variant), 3).unwrap();
        let report = evaluate(&model, &data).unwrap();
        let (mut loss, mut correct) = (0.0, 0usize);
        for s in &data {
            let (i, t, _) = collate(&[s]).unwrap();
            let z = model.predict(&i, &t).unwrap();
            let (z0, z1) = (z.data()[0], z.data()[1]);
            let p1 = 1.0 / (1.0 + (z0 - z1).exp());
            let p = if s.label() == 1 { p1 } else { 1.0 - p1 };
            loss -= p.ln();
            let pred = if z1 > z0 { 1 } else { 0 };
            correct += usize::from(pred == s.label());
        }
        assert!((report.logloss - loss / 150.0).abs() < 1e-10, "{variant}");
        assert_eq!(report.accuracy, correct as f64 / 150.0);
    }
}

#[test]
fn uniform_logits_score_ln2() {
    let (loss, correct) = score_logits(&[0.3, 0.3, -1.0, -1.0, 5.0, 5.0], &[0, 1, 1]);
    assert!((loss / 3.0 - std::f64::consts::LN_2).abs() < 1e-15);
    assert_eq!(correct, 1);
}

#[test]
fn history_starts_with_untrained_model_and_best_is_restored() {
    let data = random_samples(34, 30, 16);
    let mcfg = ModelConfig { input_dim: 16, ..ModelConfig::default() };
    let mut model = Model::new(mcfg, 4).unwrap();
    let untrained = evaluate(&model, &data[20..]).unwrap();
    let cfg = TrainConfig { max_epochs: 8, patience: 3, batch_size: 8, ..TrainConfig::default() };
    let out = train(&mut model, &data[..20], &data[20..], &cfg).unwrap();
    assert_eq!(out.history[0].epoch, 0);
    assert_eq!(out.history[0].val_logloss, untrained.logloss);
    let best = out.history.iter().map(|r| r.val_logloss).fold(f64::INFINITY, f64::min);
    assert_eq!(out.best().val_logloss, best);
    let restored = evaluate(&model, &data[20..]).unwrap();
    assert_eq!(restored.logloss, best);
}

#[test]
fn training_is_deterministic() {
    let data = random_samples(35, 24, 16);
    let mcfg = ModelConfig { input_dim: 16, ..ModelConfig::default() };
    let cfg = TrainConfig { max_epochs: 4, batch_size: 5, seed: 9, ..TrainConfig::default() };
    let run = || {
        let mut m = Model::new(mcfg.clone(), 5).unwrap();
        let out = train(&mut m, &data[..18], &data[18..], &cfg).unwrap();
        (m, out)
    };
    let (m1, o1) = run();
    let (m2, o2) = run();
    assert_eq!(o1, o2);
    assert_eq!(m1, m2);
}

#[test]
fn invalid_inputs_are_rejected() {
    let data = random_samples(36, 4, 16);
    let mcfg = ModelConfig { input_dim: 16, ..ModelConfig::default() };
    let mut model = Model::new(mcfg, 6).unwrap();
    assert!(matches!(train(&mut model, &[], &data, &TrainConfig::default()), Err(Error::Validation(_))));
    assert!(matches!(evaluate(&model, &[]), Err(Error::Validation(_))));
    let wrong_dim = random_samples(37, 2, 8);
    assert!(evaluate(&model, &wrong_dim).is_err());
}
