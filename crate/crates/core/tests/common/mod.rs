#![allow(dead_code)]

use cograph_core::rng;
use cograph_core::{build_graph, build_sample, Graph, PairedSample, Tensor};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn uniform(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    Tensor::new(vec![rows, cols], (0..rows * cols).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap()
}

pub fn random_graph(r: &mut ChaCha8Rng, n: usize, dim: usize) -> Graph {
    build_graph(uniform(r, n, dim)).unwrap()
}

/// Random paired sample with the dataset's node-count ranges.
pub fn random_sample(r: &mut ChaCha8Rng, dim: usize, id: usize) -> PairedSample {
    let ni = r.random_range(3..=8);
    let nt = r.random_range(5..=20);
    let label = r.random_range(0..2);
    build_sample(uniform(r, ni, dim), uniform(r, nt, dim), label, format!("s{id}")).unwrap()
}

pub fn random_samples(seed: u64, n: usize, dim: usize) -> Vec<PairedSample> {
    let mut r = rng::stream(seed, "tests.samples");
    (0..n).map(|i| random_sample(&mut r, dim, i)).collect()
}

/// Applies `perm` to node rows: new row `k` is old row `perm[k]`.
pub fn permute_rows(t: &Tensor, perm: &[usize]) -> Tensor {
    let rows: Vec<Vec<f64>> = perm.iter().map(|&p| t.row(p).to_vec()).collect();
    Tensor::from_rows(&rows).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
