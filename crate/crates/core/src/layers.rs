//! Graph convolution, cross-branch center fusion, self-attention graph
//! pooling and max‖mean readout, all recorded on a [`Tape`].
//!
//! Every layer works on a batch of disjoint graphs described by a
//! [`Topology`]; a single graph is the one-segment case.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{NormalizedAdjacency, Topology};
use crate::tape::{Tape, Var};

/// `ReLU(Â · H · Θ)` with no bias.
#[derive(Debug, Clone, Copy)]
pub struct GcnLayer {
    pub weight: Var,
}

impl GcnLayer {
    pub fn forward(&self, tape: &mut Tape, topo: &Topology, h: Var) -> Result<Var> {
        gcn_forward(tape, self.weight, topo.adjacency(), h)
    }
}

pub fn gcn_forward(tape: &mut Tape, weight: Var, adj: &NormalizedAdjacency, h: Var) -> Result<Var> {
    let (n, c) = tape.value(h).dims2()?;
    if adj.dim() != n {
        return Err(Error::shape("gcn_forward", &[adj.dim(), adj.dim()], &[n, c]));
    }
    let projected = tape.matmul(h, weight)?;
    let propagated = tape.spmm(adj.matrix(), projected)?;
    Ok(tape.relu(propagated))
}

/// Mean node row of every graph: `[(ΣN)×C] → [G×C]`.
pub fn graph_centers(tape: &mut Tape, topo: &Topology, h: Var) -> Result<Var> {
    tape.segment_mean(h, topo.segments())
}

/// Adds `mu · center_other[g]` to every node row of graph `g`.
pub fn fuse(
    tape: &mut Tape,
    topo_self: &Topology,
    h_self: Var,
    center_other: Var,
    mu: Var,
) -> Result<Var> {
    let (_, c) = tape.value(h_self).dims2()?;
    let (g, c2) = tape.value(center_other).dims2()?;
    if c != c2 || g != topo_self.graph_count() {
        return Err(Error::shape(
            "fuse",
            tape.value(h_self).shape(),
            tape.value(center_other).shape(),
        ));
    }
    let broadcast = tape.row_select(center_other, &topo_self.graph_id())?;
    let scaled = tape.scale_by(broadcast, mu)?;
    tape.add(h_self, scaled)
}

/// The two learnable fusion gates of one block.
#[derive(Debug, Clone, Copy)]
pub struct FusionLayer {
    /// Scales the text center added to image nodes.
    pub into_image: Var,
    /// Scales the image center added to text nodes.
    pub into_text: Var,
}

impl FusionLayer {
    /// Symmetric exchange: both centers come from the pre-fusion activations.
    pub fn forward(
        &self,
        tape: &mut Tape,
        image: (&Topology, Var),
        text: (&Topology, Var),
    ) -> Result<(Var, Var)> {
        let image_center = graph_centers(tape, image.0, image.1)?;
        let text_center = graph_centers(tape, text.0, text.1)?;
        let img = fuse(tape, image.0, image.1, text_center, self.into_image)?;
        let txt = fuse(tape, text.0, text.1, image_center, self.into_text)?;
        Ok((img, txt))
    }
}

/// Number of nodes kept from a graph of `n` nodes: `max(1, ⌈ratio·n⌉)`.
pub fn keep_count(ratio: f64, n: usize) -> usize {
    // The slack absorbs products like 0.7 * 10 = 7.000000000000001.
    let k = libm::ceil(ratio * n as f64 - 1e-9) as usize;
    k.clamp(1, n.max(1))
}

#[derive(Debug, Clone)]
pub struct Pooled {
    pub features: Var,
    pub topology: Topology,
    /// Kept rows of the input, ascending.
    pub kept: Vec<usize>,
    /// Attention score of every input row.
    pub scores: Vec<f64>,
}

/// Self-attention graph pooling with a one-output GCN scorer.
#[derive(Debug, Clone, Copy)]
pub struct SagPoolLayer {
    pub score_weight: Var,
    pub ratio: f64,
    /// Multiply kept features by their score. Disabling it leaves pure
    /// top-k node selection.
    pub gating: bool,
}

impl SagPoolLayer {
    pub fn forward(&self, tape: &mut Tape, topo: &Topology, h: Var) -> Result<Pooled> {
        if !(self.ratio > 0.0 && self.ratio <= 1.0) {
            return Err(Error::Validation(alloc::format!(
                "pooling ratio {} outside (0, 1]",
                self.ratio
            )));
        }
        let (n, c) = tape.value(h).dims2()?;
        if topo.node_count() != n {
            return Err(Error::shape("sag_pool", &[topo.node_count()], &[n, c]));
        }
        let projected = tape.matmul(h, self.score_weight)?;
        let raw = tape.spmm(topo.adjacency().matrix(), projected)?;
        let z = tape.tanh(raw);
        let scores = tape.value(z).data().to_vec();

        let seg = topo.segments();
        let mut kept = Vec::with_capacity(n);
        for g in 0..seg.count() {
            let range = seg.range(g);
            let k = keep_count(self.ratio, range.len());
            let mut order: Vec<usize> = range.collect();
            order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
            order.truncate(k);
            order.sort_unstable();
            kept.extend(order);
        }

        let selected = tape.row_select(h, &kept)?;
        let features = if self.gating {
            let gate = tape.row_select(z, &kept)?;
            tape.mul_col(selected, gate)?
        } else {
            selected
        };
        Ok(Pooled {
            features,
            topology: topo.induced(&kept)?,
            kept,
            scores,
        })
    }
}

/// Per-graph `[max ‖ mean]` over node rows: `[(ΣN)×C] → [G×2C]`.
pub fn readout(tape: &mut Tape, topo: &Topology, h: Var) -> Result<Var> {
    let max = tape.segment_max(h, topo.segments())?;
    let mean = tape.segment_mean(h, topo.segments())?;
    tape.concat_cols(max, mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::tensor::Tensor;
    use alloc::vec;

    fn topo(n: usize, edges: Vec<(usize, usize)>) -> Topology {
        let g = Graph::new(Tensor::zeros(vec![n, 1]), edges).unwrap();
        Topology::of_graphs(&[&g]).unwrap()
    }

    #[test]
    fn gcn_zero_input_gives_zero() {
        let t0 = topo(3, vec![(0, 1)]);
        let mut tape = Tape::new();
        let h = tape.constant(Tensor::zeros(vec![3, 2]));
        let w = tape.constant(Tensor::from_rows(&[[1.0, -2.0, 3.0], [0.5, 0.5, -1.0]]).unwrap());
        let out = GcnLayer { weight: w }.forward(&mut tape, &t0, h).unwrap();
        assert_eq!(tape.value(out).data(), &[0.0; 9]);
    }

    #[test]
    fn gcn_on_complete_graph_preserves_constant_rows() {
        let t0 = topo(3, vec![(0, 1), (0, 2), (1, 2)]);
        let mut tape = Tape::new();
        let h = tape.constant(Tensor::from_rows(&[[0.3, 2.0]; 3]).unwrap());
        let w = tape.constant(Tensor::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap());
        let out = GcnLayer { weight: w }.forward(&mut tape, &t0, h).unwrap();
        for (a, b) in tape.value(out).data().iter().zip(tape.value(h).data()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn gcn_dimension_mismatch() {
        let t0 = topo(2, vec![]);
        let mut tape = Tape::new();
        let h = tape.constant(Tensor::zeros(vec![3, 2]));
        let w = tape.constant(Tensor::zeros(vec![2, 2]));
        assert!(matches!(
            GcnLayer { weight: w }.forward(&mut tape, &t0, h),
            Err(Error::Shape { .. })
        ));
    }

    fn run_fuse(mu: f64, center: [f64; 2], h: &[[f64; 2]]) -> Vec<f64> {
        let t0 = topo(h.len(), vec![]);
        let mut tape = Tape::new();
        let hv = tape.constant(Tensor::from_rows(h).unwrap());
        let c = tape.constant(Tensor::from_rows(&[center]).unwrap());
        let m = tape.constant(Tensor::scalar(mu));
        let out = fuse(&mut tape, &t0, hv, c, m).unwrap();
        tape.value(out).data().to_vec()
    }

    #[test]
    fn fuse_examples() {
        assert_eq!(run_fuse(0.0, [5.0, -3.0], &[[1.5, 2.5]]), vec![1.5, 2.5]);
        assert_eq!(run_fuse(1.0, [1.0, 1.0], &[[0.0, 0.0]]), vec![1.0, 1.0]);
        assert_eq!(
            run_fuse(0.5, [2.0, 4.0], &[[1.0, 1.0], [3.0, 3.0]]),
            vec![2.0, 3.0, 4.0, 5.0]
        );
    }

    #[test]
    fn fuse_rejects_width_mismatch() {
        let t0 = topo(1, vec![]);
        let mut tape = Tape::new();
        let h = tape.constant(Tensor::zeros(vec![1, 2]));
        let c = tape.constant(Tensor::zeros(vec![1, 3]));
        let m = tape.constant(Tensor::scalar(1.0));
        assert!(fuse(&mut tape, &t0, h, c, m).is_err());
    }

    #[test]
    fn zero_gate_passes_gradient_unchanged() {
        let t0 = topo(2, vec![(0, 1)]);
        let mut tape = Tape::new();
        let h = tape.leaf(Tensor::from_rows(&[[1.0, -2.0], [0.5, 3.0]]).unwrap().with_grad());
        let c = tape.constant(Tensor::from_rows(&[[4.0, 4.0]]).unwrap());
        let m = tape.leaf(Tensor::scalar(0.0).with_grad());
        let f = fuse(&mut tape, &t0, h, c, m).unwrap();
        let w = tape.constant(Tensor::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap());
        let y = tape.mul(f, w).unwrap();
        let s = tape.sum(y);
        tape.backward(s).unwrap();
        assert_eq!(tape.grad(h).unwrap(), &[1.0, 2.0, 3.0, 4.0]);
        // ∂/∂μ = Σ w ⊙ center = 4 · (1 + 2 + 3 + 4)
        assert_eq!(tape.grad(m).unwrap(), &[40.0]);
    }

    #[test]
    fn keep_counts() {
        assert_eq!(keep_count(0.8, 5), 4);
        assert_eq!(keep_count(0.8, 1), 1);
        assert_eq!(keep_count(0.8, 8), 7);
        assert_eq!(keep_count(0.7, 10), 7);
        assert_eq!(keep_count(1.0, 6), 6);
        assert_eq!(keep_count(0.01, 6), 1);
    }

    #[test]
    fn single_node_pool_keeps_node_scaled_by_score() {
        let t0 = topo(1, vec![]);
        let mut tape = Tape::new();
        let h = tape.constant(Tensor::from_rows(&[[2.0, -1.0]]).unwrap());
        let w = tape.constant(Tensor::from_rows(&[[0.5], [0.25]]).unwrap());
        let p = SagPoolLayer {
            score_weight: w,
            ratio: 0.8,
            gating: true,
        }
        .forward(&mut tape, &t0, h)
        .unwrap();
        assert_eq!(p.kept, vec![0]);
        let z = libm::tanh(2.0 * 0.5 - 0.25);
        assert_eq!(tape.value(p.features).data(), &[2.0 * z, -z]);
    }

    #[test]
    fn pooling_three_nodes_matches_scripted_steps() {
        // path 0-1-2, features 1-d, score weight 1
        // Â = [[1/2, 1/√6, 0], [1/√6, 1/3, 1/√6], [0, 1/√6, 1/2]]
        let t0 = topo(3, vec![(0, 1), (1, 2)]);
        let x = [1.0, -2.0, 0.5];
        let mut tape = Tape::new();
        let h = tape.constant(Tensor::new(vec![3, 1], x.to_vec()).unwrap());
        let w = tape.constant(Tensor::from_rows(&[[1.0]]).unwrap());
        let p = SagPoolLayer {
            score_weight: w,
            ratio: 0.5,
            gating: true,
        }
        .forward(&mut tape, &t0, h)
        .unwrap();
        let r6 = 1.0 / libm::sqrt(6.0);
        let raw = [
            0.5 * x[0] + r6 * x[1],
            r6 * x[0] + x[1] / 3.0 + r6 * x[2],
            r6 * x[1] + 0.5 * x[2],
        ];
        let z: Vec<f64> = raw.iter().map(|&v| libm::tanh(v)).collect();
        // k = ⌈1.5⌉ = 2; z ≈ [-0.306, -0.054, -0.513] → nodes 0 and 1
        assert_eq!(p.kept, vec![0, 1]);
        let out = tape.value(p.features).data();
        assert!((out[0] - x[0] * z[0]).abs() < 1e-15);
        assert!((out[1] - x[1] * z[1]).abs() < 1e-15);
        // kept edge (0,1) re-normalized as a dipole
        assert_eq!(p.topology.adjacency().to_dense(), vec![0.5; 4]);
    }

    #[test]
    fn pool_ties_prefer_lower_index() {
        let t0 = topo(4, vec![]);
        let mut tape = Tape::new();
        let h = tape.constant(Tensor::from_rows(&[[1.0]; 4]).unwrap());
        let w = tape.constant(Tensor::from_rows(&[[1.0]]).unwrap());
        let p = SagPoolLayer {
            score_weight: w,
            ratio: 0.5,
            gating: false,
        }
        .forward(&mut tape, &t0, h)
        .unwrap();
        assert_eq!(p.kept, vec![0, 1]);
    }

    #[test]
    fn readout_examples() {
        let t0 = topo(2, vec![]);
        let mut tape = Tape::new();
        let h = tape.constant(Tensor::from_rows(&[[1.0, 2.0], [3.0, 0.0]]).unwrap());
        let r = readout(&mut tape, &t0, h).unwrap();
        assert_eq!(tape.value(r).data(), &[3.0, 2.0, 2.0, 1.0]);

        let t1 = topo(1, vec![]);
        let h = tape.constant(Tensor::from_rows(&[[0.7, -4.0]]).unwrap());
        let r = readout(&mut tape, &t1, h).unwrap();
        assert_eq!(tape.value(r).data(), &[0.7, -4.0, 0.7, -4.0]);
    }
}
