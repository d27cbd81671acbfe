use std::io::Write;

use cograph::record::{load_dataset, save_dataset, write_records, DataError, SampleRecord};
use cograph::synth::{generate_records, generate_synthetic, prototypes, SynthSpec};
use sha2::{Digest, Sha256};

fn small_spec(n: usize, seed: u64) -> SynthSpec {
    SynthSpec { n_samples: n, feature_dim: 16, seed, ..SynthSpec::default() }
}

#[test]
fn empty_file_is_empty_dataset() {
    let f = tempfile::NamedTempFile::new().unwrap();
    assert!(load_dataset(f.path()).unwrap().is_empty());
}

#[test]
fn save_load_round_trip_is_bit_exact() {
    let samples = generate_synthetic(&SynthSpec { n_samples: 25, seed: 3, ..SynthSpec::default() });
    let f = tempfile::NamedTempFile::new().unwrap();
    save_dataset(f.path(), &samples).unwrap();
    let back = load_dataset(f.path()).unwrap();
    assert_eq!(back.len(), samples.len());
    for (a, b) in samples.iter().zip(&back) {
        assert_eq!(a, b);
        let bits = |s: &cograph_core::PairedSample| -> Vec<u64> {
            s.image_graph.node_features().data().iter()
                .chain(s.text_graph.node_features().data())
                .chain(&s.image_graph.adjacency().to_dense())
                .chain(&s.text_graph.adjacency().to_dense())
                .map(|v| v.to_bits())
                .collect()
        };
        assert_eq!(bits(a), bits(b));
    }
}

#[test]
fn invariant_violation_names_field_and_record() {
    let mut rec = generate_records(&small_spec(1, 0)).remove(0);
    rec.image_features.truncate(2);
    let f = tempfile::NamedTempFile::new().unwrap();
    write_records(f.path(), [&generate_records(&small_spec(1, 1))[0], &rec]).unwrap();
    let err = load_dataset(f.path()).unwrap_err();
    let msg = err.to_string();
    assert!(matches!(err, DataError::Invalid { line: 2, field: "image_features", .. }), "{msg}");
    assert!(msg.contains("image count below minimum 3"));
    assert!(msg.contains(&rec.id));
}

#[test]
fn malformed_line_reports_line_number() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    let good = serde_json::to_string(&generate_records(&small_spec(1, 0))[0]).unwrap();
    writeln!(f, "{good}\n{good}\n{{\"id\": 3").unwrap();
    let err = load_dataset(f.path()).unwrap_err();
    assert!(matches!(err, DataError::Malformed { line: 3, .. }), "{err}");
}

#[test]
fn unknown_fields_rejected() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    let mut v = serde_json::to_value(&generate_records(&small_spec(1, 0))[0]).unwrap();
    v["caption"] = "x".into();
    writeln!(f, "{v}").unwrap();
    assert!(matches!(load_dataset(f.path()).unwrap_err(), DataError::Malformed { line: 1, .. }));
}

#[test]
fn generated_samples_satisfy_record_invariants() {
    let recs = generate_records(&SynthSpec { n_samples: 300, seed: 4, ..SynthSpec::default() });
    for r in &recs {
        r.validate().unwrap();
        assert!((3..=8).contains(&r.image_features.len()));
        assert!((5..=20).contains(&r.text_features.len()));
        assert!(r.image_features.iter().chain(&r.text_features).all(|v| v.len() == 256));
    }
}

#[test]
fn generation_is_seed_deterministic() {
    assert_eq!(generate_records(&small_spec(20, 5)), generate_records(&small_spec(20, 5)));
    assert_ne!(generate_records(&small_spec(20, 5)), generate_records(&small_spec(20, 6)));
}

#[test]
fn labels_balanced_for_large_draws() {
    for (n, seed) in [(500, 0), (501, 1), (1000, 2)] {
        let recs = generate_records(&SynthSpec { n_samples: n, feature_dim: 4, seed, ..SynthSpec::default() });
        let pos = recs.iter().filter(|r| r.label == 1).count() as f64 / n as f64;
        assert!((pos - 0.5).abs() <= 0.05, "{pos}");
    }
}

fn mean_rows(rows: &[Vec<f64>]) -> Vec<f64> {
    let mut m = vec![0.0; rows[0].len()];
    for r in rows {
        for (a, b) in m.iter_mut().zip(r) {
            *a += b / rows.len() as f64;
        }
    }
    m
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn noiseless_data_is_separated_by_latent_agreement() {
    let spec = SynthSpec { n_samples: 200, noise_sigma: 0.0, cross_modal_strength: 1.0, seed: 8, ..SynthSpec::default() };
    let v = prototypes(&spec).latent;
    let recs = generate_records(&spec);
    for r in &recs {
        let si = dot(&mean_rows(&r.image_features), &v).signum();
        let st = dot(&mean_rows(&r.text_features), &v).signum();
        assert_eq!(usize::from(si == st), r.label, "{}", r.id);
    }
    assert_eq!(recs, generate_records(&spec));
}

/// Standardized L2 logistic regression by full-batch gradient descent.
fn probe_accuracy(x: &[Vec<f64>], y: &[usize], n_train: usize) -> f64 {
    let d = x[0].len();
    let (mut mu, mut sd) = (vec![0.0; d], vec![0.0; d]);
    for row in &x[..n_train] {
        for j in 0..d {
            mu[j] += row[j] / n_train as f64;
        }
    }
    for row in &x[..n_train] {
        for j in 0..d {
            sd[j] += (row[j] - mu[j]).powi(2) / n_train as f64;
        }
    }
    let z: Vec<Vec<f64>> = x.iter().map(|r| (0..d).map(|j| (r[j] - mu[j]) / sd[j].sqrt().max(1e-12)).collect()).collect();
    let (mut w, mut b) = (vec![0.0; d], 0.0);
    let lambda = 1e-2;
    for _ in 0..300 {
        let mut gw = vec![0.0; d];
        let mut gb = 0.0;
        for (row, &t) in z[..n_train].iter().zip(y) {
            let p = 1.0 / (1.0 + (-(dot(row, &w) + b)).exp());
            let e = p - t as f64;
            for j in 0..d {
                gw[j] += e * row[j] / n_train as f64;
            }
            gb += e / n_train as f64;
        }
        for j in 0..d {
            w[j] -= 0.5 * (gw[j] + lambda * w[j]);
        }
        b -= 0.5 * gb;
    }
    let test = &z[n_train..];
    let correct = test.iter().zip(&y[n_train..]).filter(|(r, &t)| usize::from(dot(r, &w) + b > 0.0) == t).count();
    correct as f64 / test.len() as f64
}

#[test]
fn concatenated_probe_beats_single_modality_probes() {
    let recs = generate_records(&SynthSpec { n_samples: 1000, seed: 9, ..SynthSpec::default() });
    let y: Vec<usize> = recs.iter().map(|r| r.label).collect();
    let img: Vec<Vec<f64>> = recs.iter().map(|r| mean_rows(&r.image_features)).collect();
    let txt: Vec<Vec<f64>> = recs.iter().map(|r| mean_rows(&r.text_features)).collect();
    let both: Vec<Vec<f64>> = img.iter().zip(&txt).map(|(a, b)| [a.as_slice(), b].concat()).collect();
    let (ai, at, ab) = (probe_accuracy(&img, &y, 800), probe_accuracy(&txt, &y, 800), probe_accuracy(&both, &y, 800));
    println!("probe accuracy: image {ai:.3} text {at:.3} concat {ab:.3}");
    assert!(ab > ai && ab > at);
}

fn draw_hash() -> String {
    let recs: Vec<SampleRecord> = generate_records(&SynthSpec { n_samples: 10, seed: 0, ..SynthSpec::default() });
    let mut h = Sha256::new();
    for r in &recs {
        h.update(serde_json::to_vec(r).unwrap());
        h.update(b"\n");
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[test]
fn generator_matches_golden_hash() {
    let golden = include_str!("golden/synth_10_seed0.sha256").trim();
    assert_eq!(draw_hash(), golden);
}
