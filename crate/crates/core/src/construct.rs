//! Edge construction from raw node features.
//!
//! Within one graph every node pair is scored by cosine similarity and the
//! top half of the pairs (`⌈P/2⌉` of `P = N(N-1)/2`) become unit-weight
//! edges. Equal similarities are ordered by `(i, j)` so the result is
//! reproducible.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{Graph, PairedSample};
use crate::tensor::Tensor;

/// `aᵀb / (‖a‖ ‖b‖)`.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::shape("cosine_similarity", &[a.len()], &[b.len()]));
    }
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Validation("zero-norm feature vector".into()));
    }
    Ok(dot(a, b) / (na * nb))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Number of edges kept for a graph with `n` nodes.
pub fn kept_edge_count(n: usize) -> usize {
    let pairs = n * n.saturating_sub(1) / 2;
    pairs.div_ceil(2)
}

/// Scores every node pair and keeps the most similar half as edges.
pub fn build_graph(node_features: Tensor) -> Result<Graph> {
    let (n, _) = node_features.dims2()?;
    if n == 0 {
        return Err(Error::Validation("cannot build a graph with zero nodes".into()));
    }
    let mut norms = Vec::with_capacity(n);
    for i in 0..n {
        let row = node_features.row(i);
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("node {i} has a non-finite feature")));
        }
        let nv = norm(row);
        if nv == 0.0 {
            return Err(Error::Validation(format!("node {i} has a zero-norm feature vector")));
        }
        norms.push(nv);
    }
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let s = dot(node_features.row(i), node_features.row(j)) / (norms[i] * norms[j]);
            pairs.push((s, i, j));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let keep = kept_edge_count(n);
    let edges = pairs[..keep].iter().map(|&(_, i, j)| (i, j)).collect();
    Graph::new(node_features, edges)
}

/// Builds both modality graphs of one sample.
pub fn build_sample(
    image_features: Tensor,
    text_features: Tensor,
    label: usize,
    id: String,
) -> Result<PairedSample> {
    if image_features.rows() == 0 || image_features.is_empty() {
        return Err(Error::Validation(format!("sample `{id}`: no image nodes")));
    }
    if text_features.rows() == 0 || text_features.is_empty() {
        return Err(Error::Validation(format!("sample `{id}`: no text nodes")));
    }
    let image = build_graph(image_features)
        .map_err(|e| Error::Validation(format!("sample `{id}`, image graph: {e}")))?;
    let text = build_graph(text_features)
        .map_err(|e| Error::Validation(format!("sample `{id}`, text graph: {e}")))?;
    PairedSample::new(id, image, text, label)
}
