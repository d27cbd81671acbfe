mod common;

use cograph_core::graph::GraphBatch;
use cograph_core::train::collate;
use cograph_core::{build_sample, rng, Model, ModelConfig, PairedSample, Tensor, Variant};
use common::{max_abs_diff, permute_rows, random_samples};
use rand::seq::SliceRandom;

fn batches(samples: &[PairedSample]) -> (GraphBatch, GraphBatch) {
    let refs: Vec<_> = samples.iter().collect();
    let (i, t, _) = collate(&refs).unwrap();
    (i, t)
}

/// Copies every same-named parameter of `from` into `to`.
fn transplant(from: &Model, to: &mut Model) {
    for name in to.param_names() {
        let t = from.param(&name).unwrap_or_else(|| panic!("{name} missing")).tensor.clone();
        to.set_param(&name, t).unwrap();
    }
}

#[test]
fn zero_gates_reduce_to_sagpool_baseline() {
    let samples = random_samples(21, 50, 256);
    let (img, txt) = batches(&samples);
    for seed in [3, 4] {
        let collab_cfg = ModelConfig { mu_init: 0.0, ..ModelConfig::default() };
        let collab = Model::new(collab_cfg.clone(), seed).unwrap();
        // independent init, then explicit transplant
        let mut base = Model::new(collab_cfg.with_variant(Variant::TwoBranchSagpool), seed + 100).unwrap();
        transplant(&collab, &mut base);
        let a = collab.predict(&img, &txt).unwrap();
        let b = base.predict(&img, &txt).unwrap();
        assert_eq!(a.shape(), &[50, 2]);
        assert!(max_abs_diff(a.data(), b.data()) <= 1e-12);
    }
}

#[test]
fn nonzero_gates_change_logits() {
    let samples = random_samples(22, 10, 256);
    let (img, txt) = batches(&samples);
    let collab = Model::new(ModelConfig::default(), 5).unwrap();
    let mut base = Model::new(ModelConfig::default().with_variant(Variant::TwoBranchSagpool), 0).unwrap();
    transplant(&collab, &mut base);
    let a = collab.predict(&img, &txt).unwrap();
    let b = base.predict(&img, &txt).unwrap();
    assert!(max_abs_diff(a.data(), b.data()) > 1e-6);
}

#[test]
fn full_ratio_ungated_pooling_is_identity() {
    let samples = random_samples(23, 20, 16);
    let (img, txt) = batches(&samples);
    let cfg = ModelConfig { input_dim: 16, pooling_ratio: 1.0, score_gating: false, ..ModelConfig::default() };
    let pooled = Model::new(cfg.with_variant(Variant::TwoBranchSagpool), 8).unwrap();
    let mut plain = Model::new(cfg.with_variant(Variant::TwoBranchPlain), 9).unwrap();
    transplant(&pooled, &mut plain);
    let a = pooled.predict(&img, &txt).unwrap();
    let b = plain.predict(&img, &txt).unwrap();
    assert_eq!(a.data(), b.data());
}

#[test]
fn single_branch_matches_two_branch_with_muted_modality() {
    let samples = random_samples(24, 20, 16);
    let (img, txt) = batches(&samples);
    let cfg = ModelConfig { input_dim: 16, ..ModelConfig::default() };
    for (single, muted_rows) in [(Variant::ImageOnly, 64..128), (Variant::TextOnly, 0..64)] {
        let one = Model::new(cfg.with_variant(single), 10).unwrap();
        let mut two = Model::new(cfg.with_variant(Variant::TwoBranchSagpool), 11).unwrap();
        for name in one.param_names() {
            if name != "head.fc0.weight" {
                two.set_param(&name, one.param(&name).unwrap().tensor.clone()).unwrap();
            }
        }
        // fc0 of the two-branch head: the live modality's rows copied, the other zeroed
        let w1 = &one.param("head.fc0.weight").unwrap().tensor;
        let cols = w1.cols();
        let mut data = vec![0.0; 128 * cols];
        let live: Vec<usize> = (0..128).filter(|r| !muted_rows.contains(r)).collect();
        for (k, &r) in live.iter().enumerate() {
            data[r * cols..(r + 1) * cols].copy_from_slice(w1.row(k));
        }
        two.set_param("head.fc0.weight", Tensor::new(vec![128, cols], data).unwrap()).unwrap();
        let a = one.predict(&img, &txt).unwrap();
        let b = two.predict(&img, &txt).unwrap();
        assert!(max_abs_diff(a.data(), b.data()) <= 1e-12, "{single}");
    }
}

#[test]
fn node_relabeling_leaves_logits_unchanged() {
    let mut r = rng::stream(25, "tests.relabel");
    let samples = random_samples(25, 30, 256);
    let relabeled: Vec<PairedSample> = samples
        .iter()
        .map(|s| {
            let mut pi: Vec<usize> = (0..s.image_graph.node_count()).collect();
            let mut pt: Vec<usize> = (0..s.text_graph.node_count()).collect();
            pi.shuffle(&mut r);
            pt.shuffle(&mut r);
            build_sample(
                permute_rows(s.image_graph.node_features(), &pi),
                permute_rows(s.text_graph.node_features(), &pt),
                s.label(),
                s.id.clone(),
            )
            .unwrap()
        })
        .collect();
    let (img, txt) = batches(&samples);
    let (img_p, txt_p) = batches(&relabeled);
    for variant in Variant::ALL {
        let model = Model::new(ModelConfig::default().with_variant(variant), 12).unwrap();
        let a = model.predict(&img, &txt).unwrap();
        let b = model.predict(&img_p, &txt_p).unwrap();
        let d = max_abs_diff(a.data(), b.data());
        assert!(d <= 1e-9, "{variant}: {d}");
    }
}

#[test]
fn batching_does_not_change_per_sample_logits() {
    let samples = random_samples(26, 12, 32);
    let cfg = ModelConfig { input_dim: 32, ..ModelConfig::default() };
    for variant in Variant::ALL {
        let model = Model::new(cfg.with_variant(variant), 13).unwrap();
        let (img, txt) = batches(&samples);
        let all = model.predict(&img, &txt).unwrap();
        for (k, s) in samples.iter().enumerate() {
            let (i1, t1) = batches(std::slice::from_ref(s));
            let one = model.predict(&i1, &t1).unwrap();
            assert!(max_abs_diff(one.data(), all.row(k)) <= 1e-12, "{variant} sample {k}");
        }
    }
}

#[test]
fn logits_stay_finite() {
    let mut r = rng::stream(27, "tests.finite");
    for trial in 0..1000u64 {
        let s = common::random_sample(&mut r, 8, trial as usize);
        let variant = Variant::ALL[trial as usize % Variant::ALL.len()];
        let cfg = ModelConfig { input_dim: 8, ..ModelConfig::default() }.with_variant(variant);
        let model = Model::new(cfg, trial).unwrap();
        let (img, txt) = batches(std::slice::from_ref(&s));
        let out = model.predict(&img, &txt).unwrap();
        assert!(out.data().iter().all(|v| v.is_finite()), "trial {trial}");
    }
}

#[test]
fn parameter_names_are_stable_across_seeds() {
    for variant in Variant::ALL {
        let a = Model::new(ModelConfig::default().with_variant(variant), 1).unwrap();
        let b = Model::new(ModelConfig::default().with_variant(variant), 2).unwrap();
        assert_eq!(a.param_names(), b.param_names());
        assert_ne!(a.params(), b.params());
    }
}
