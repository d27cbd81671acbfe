//! Reverse-mode automatic differentiation over dense matrices.
//!
//! A [`Tape`] records every operation executed through it, in order. Each
//! recorded node keeps its forward value and enough context to apply its
//! gradient rule. [`Tape::backward`] walks the record in reverse, seeding the
//! scalar loss with 1 and accumulating vector-Jacobian products into every
//! node that participates in gradient tracking.
//!
//! Leaves are created from [`Tensor`]s; a leaf tracks gradients iff the
//! tensor's `requires_grad` flag is set. An operation tracks gradients iff
//! any input does, so constants (node features, adjacency) never allocate
//! gradient buffers.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use crate::tensor::{gemm_nn, gemm_nt, gemm_tn, Tensor};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Contiguous partition of matrix rows into groups (one group per graph).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segments {
    offsets: Vec<usize>,
}

impl Segments {
    /// From per-group sizes. Every group must be nonempty.
    pub fn from_sizes<I: IntoIterator<Item = usize>>(sizes: I) -> Result<Self> {
        let mut offsets = vec![0];
        for s in sizes {
            if s == 0 {
                return Err(Error::Validation("segments must be nonempty".into()));
            }
            offsets.push(offsets.last().unwrap() + s);
        }
        Ok(Segments { offsets })
    }

    pub fn single(rows: usize) -> Result<Self> {
        Self::from_sizes([rows])
    }

    pub fn count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn total(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn range(&self, g: usize) -> core::ops::Range<usize> {
        self.offsets[g]..self.offsets[g + 1]
    }

    pub fn size(&self, g: usize) -> usize {
        self.offsets[g + 1] - self.offsets[g]
    }

    /// Owning group of every row, sorted and contiguous.
    pub fn owners(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.total());
        for g in 0..self.count() {
            out.extend(core::iter::repeat_n(g, self.size(g)));
        }
        out
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    SpMM(Arc<CsrMatrix>, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    ScaleBy(Var, Var),
    Mul(Var, Var),
    MulCol(Var, Var),
    Relu(Var),
    Tanh(Var),
    ConcatCols(Var, Var),
    RowSelect(Var, Vec<usize>),
    SegmentMean(Var, Segments),
    // argmax[g * cols + c] is the source row for output entry (g, c)
    SegmentMax(Var, Vec<usize>),
    Sum(Var),
    SoftmaxCrossEntropy {
        logits: Var,
        probs: Vec<f64>,
        labels: Vec<usize>,
    },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

/// Ordered record of executed operations.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    grads: Vec<Option<Vec<f64>>>,
    backward_done: bool,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Drops every recorded node and gradient. Handles from before the
    /// reset become invalid.
    pub fn clear(&mut self) {
        self.nodes.clear();
        self.grads.clear();
        self.backward_done = false;
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn tracks(&self, v: Var) -> bool {
        self.nodes[v.0].value.requires_grad
    }

    /// Gradient of the last `backward` loss w.r.t. `v`, if any flowed.
    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    /// Records a leaf. It tracks gradients iff `t.requires_grad`.
    pub fn leaf(&mut self, mut t: Tensor) -> Var {
        t.grad = None;
        self.push(t, Op::Leaf)
    }

    /// Records a leaf that never tracks gradients.
    pub fn constant(&mut self, mut t: Tensor) -> Var {
        t.requires_grad = false;
        self.leaf(t)
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    fn record(&mut self, shape: Vec<usize>, data: Vec<f64>, tracked: bool, op: Op) -> Var {
        let mut t = Tensor::new(shape, data).expect("op produced inconsistent shape");
        t.requires_grad = tracked;
        let op = if tracked { op } else { Op::Leaf };
        self.push(t, op)
    }

    fn dims(&self, v: Var) -> Result<(usize, usize)> {
        self.value(v).dims2()
    }

    fn shape_of(&self, v: Var) -> Vec<usize> {
        self.value(v).shape().to_vec()
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (n, k) = self.dims(a)?;
        let (k2, m) = self.dims(b)?;
        if k != k2 {
            return Err(Error::shape("matmul", &[n, k], &[k2, m]));
        }
        let mut out = vec![0.0; n * m];
        gemm_nn(self.value(a).data(), self.value(b).data(), &mut out, n, k, m);
        let tracked = self.tracks(a) || self.tracks(b);
        Ok(self.record(vec![n, m], out, tracked, Op::MatMul(a, b)))
    }

    /// Sparse constant times dense: `adj · x`.
    pub fn spmm(&mut self, adj: &Arc<CsrMatrix>, x: Var) -> Result<Var> {
        let (n, m) = self.dims(x)?;
        if adj.cols() != n {
            return Err(Error::shape("spmm", &[adj.rows(), adj.cols()], &[n, m]));
        }
        let mut out = vec![0.0; adj.rows() * m];
        adj.mul_dense_into(self.value(x).data(), m, &mut out);
        let tracked = self.tracks(x);
        Ok(self.record(vec![adj.rows(), m], out, tracked, Op::SpMM(adj.clone(), x)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(Error::shape("add", self.value(a).shape(), self.value(b).shape()));
        }
        let out = zip_map(self.value(a).data(), self.value(b).data(), |x, y| x + y);
        let tracked = self.tracks(a) || self.tracks(b);
        Ok(self.record(self.shape_of(a), out, tracked, Op::Add(a, b)))
    }

    /// `x[N×C] + row[1×C]`, the row broadcast to every row of `x`.
    pub fn add_row(&mut self, x: Var, row: Var) -> Result<Var> {
        let (n, c) = self.dims(x)?;
        if self.dims(row)? != (1, c) {
            return Err(Error::shape("add_row", &[n, c], self.value(row).shape()));
        }
        let r = self.value(row).data();
        let mut out = self.value(x).data().to_vec();
        for chunk in out.chunks_mut(c.max(1)) {
            for (o, &b) in chunk.iter_mut().zip(r) {
                *o += b;
            }
        }
        let tracked = self.tracks(x) || self.tracks(row);
        Ok(self.record(vec![n, c], out, tracked, Op::AddRow(x, row)))
    }

    /// Multiplication by a fixed constant.
    pub fn scale(&mut self, x: Var, s: f64) -> Var {
        let out = self.value(x).data().iter().map(|&v| v * s).collect();
        let tracked = self.tracks(x);
        self.record(self.shape_of(x), out, tracked, Op::Scale(x, s))
    }

    /// Multiplication by a (possibly trainable) scalar.
    pub fn scale_by(&mut self, x: Var, s: Var) -> Result<Var> {
        if self.value(s).len() != 1 {
            return Err(Error::shape("scale_by", self.value(x).shape(), self.value(s).shape()));
        }
        let sv = self.value(s).item();
        let out = self.value(x).data().iter().map(|&v| v * sv).collect();
        let tracked = self.tracks(x) || self.tracks(s);
        Ok(self.record(self.shape_of(x), out, tracked, Op::ScaleBy(x, s)))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(Error::shape("mul", self.value(a).shape(), self.value(b).shape()));
        }
        let out = zip_map(self.value(a).data(), self.value(b).data(), |x, y| x * y);
        let tracked = self.tracks(a) || self.tracks(b);
        Ok(self.record(self.shape_of(a), out, tracked, Op::Mul(a, b)))
    }

    /// `x[N×C] ⊙ col[N×1]`, the column broadcast across every column of `x`.
    pub fn mul_col(&mut self, x: Var, col: Var) -> Result<Var> {
        let (n, c) = self.dims(x)?;
        if self.dims(col)? != (n, 1) {
            return Err(Error::shape("mul_col", &[n, c], self.value(col).shape()));
        }
        let s = self.value(col).data();
        let mut out = self.value(x).data().to_vec();
        for (i, chunk) in out.chunks_mut(c.max(1)).enumerate() {
            for o in chunk {
                *o *= s[i];
            }
        }
        let tracked = self.tracks(x) || self.tracks(col);
        Ok(self.record(vec![n, c], out, tracked, Op::MulCol(x, col)))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let out = self
            .value(x)
            .data()
            .iter()
            .map(|&v| if v > 0.0 { v } else { 0.0 })
            .collect();
        let tracked = self.tracks(x);
        self.record(self.shape_of(x), out, tracked, Op::Relu(x))
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let out = self.value(x).data().iter().map(|&v| libm::tanh(v)).collect();
        let tracked = self.tracks(x);
        self.record(self.shape_of(x), out, tracked, Op::Tanh(x))
    }

    /// `[a | b]` for matrices with equal row counts.
    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var> {
        let (n, ca) = self.dims(a)?;
        let (n2, cb) = self.dims(b)?;
        if n != n2 {
            return Err(Error::shape("concat_cols", &[n, ca], &[n2, cb]));
        }
        let (ad, bd) = (self.value(a).data(), self.value(b).data());
        let mut out = Vec::with_capacity(n * (ca + cb));
        for i in 0..n {
            out.extend_from_slice(&ad[i * ca..(i + 1) * ca]);
            out.extend_from_slice(&bd[i * cb..(i + 1) * cb]);
        }
        let tracked = self.tracks(a) || self.tracks(b);
        Ok(self.record(vec![n, ca + cb], out, tracked, Op::ConcatCols(a, b)))
    }

    /// Gathers rows by index. Indices may repeat (row broadcast).
    pub fn row_select(&mut self, x: Var, indices: &[usize]) -> Result<Var> {
        let (n, c) = self.dims(x)?;
        let xd = self.value(x).data();
        let mut out = Vec::with_capacity(indices.len() * c);
        for &i in indices {
            if i >= n {
                return Err(Error::Index {
                    op: "row_select",
                    index: i,
                    len: n,
                });
            }
            out.extend_from_slice(&xd[i * c..(i + 1) * c]);
        }
        let tracked = self.tracks(x);
        Ok(self.record(
            vec![indices.len(), c],
            out,
            tracked,
            Op::RowSelect(x, indices.to_vec()),
        ))
    }

    /// Columnwise mean of each row group: `[N×C] → [G×C]`.
    pub fn segment_mean(&mut self, x: Var, seg: &Segments) -> Result<Var> {
        let (n, c) = self.dims(x)?;
        if seg.total() != n {
            return Err(Error::shape("segment_mean", &[n, c], &[seg.total()]));
        }
        let xd = self.value(x).data();
        let mut out = vec![0.0; seg.count() * c];
        for g in 0..seg.count() {
            let orow = &mut out[g * c..(g + 1) * c];
            for i in seg.range(g) {
                for (o, &v) in orow.iter_mut().zip(&xd[i * c..(i + 1) * c]) {
                    *o += v;
                }
            }
            let inv = seg.size(g) as f64;
            for o in orow {
                *o /= inv;
            }
        }
        let tracked = self.tracks(x);
        Ok(self.record(
            vec![seg.count(), c],
            out,
            tracked,
            Op::SegmentMean(x, seg.clone()),
        ))
    }

    /// Columnwise max of each row group. On ties the lowest row wins the
    /// gradient.
    pub fn segment_max(&mut self, x: Var, seg: &Segments) -> Result<Var> {
        let (n, c) = self.dims(x)?;
        if seg.total() != n {
            return Err(Error::shape("segment_max", &[n, c], &[seg.total()]));
        }
        let xd = self.value(x).data();
        let mut out = vec![0.0; seg.count() * c];
        let mut argmax = vec![0usize; seg.count() * c];
        for g in 0..seg.count() {
            let r = seg.range(g);
            for j in 0..c {
                let mut best = r.start;
                for i in r.clone().skip(1) {
                    if xd[i * c + j] > xd[best * c + j] {
                        best = i;
                    }
                }
                out[g * c + j] = xd[best * c + j];
                argmax[g * c + j] = best;
            }
        }
        let tracked = self.tracks(x);
        Ok(self.record(vec![seg.count(), c], out, tracked, Op::SegmentMax(x, argmax)))
    }

    /// Columnwise mean over all rows: `[N×C] → [1×C]`.
    pub fn reduce_mean_rows(&mut self, x: Var) -> Result<Var> {
        let seg = self.whole(x)?;
        self.segment_mean(x, &seg)
    }

    /// Columnwise max over all rows: `[N×C] → [1×C]`.
    pub fn reduce_max_rows(&mut self, x: Var) -> Result<Var> {
        let seg = self.whole(x)?;
        self.segment_max(x, &seg)
    }

    fn whole(&self, x: Var) -> Result<Segments> {
        let (n, _) = self.dims(x)?;
        if n == 0 {
            return Err(Error::Contract("reduction over zero rows".into()));
        }
        Segments::single(n)
    }

    /// Sum of all entries, as a scalar.
    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().sum();
        let tracked = self.tracks(x);
        self.record(Vec::new(), vec![s], tracked, Op::Sum(x))
    }

    /// Mean over the batch of `-log softmax(logits)[label]`.
    pub fn softmax_cross_entropy(&mut self, logits: Var, labels: &[usize]) -> Result<Var> {
        let (b, k) = self.dims(logits)?;
        if b == 0 || labels.len() != b {
            return Err(Error::shape("softmax_cross_entropy", &[b, k], &[labels.len()]));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::Validation(format!(
                "label {bad} outside the class range 0..{k}"
            )));
        }
        let ld = self.value(logits).data();
        let mut probs = vec![0.0; b * k];
        let mut total = 0.0;
        for i in 0..b {
            let row = &ld[i * k..(i + 1) * k];
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = row.iter().map(|&v| libm::exp(v - max)).sum();
            let lse = max + libm::log(z);
            total += lse - row[labels[i]];
            for j in 0..k {
                probs[i * k + j] = libm::exp(row[j] - lse);
            }
        }
        let tracked = self.tracks(logits);
        Ok(self.record(
            Vec::new(),
            vec![total / b as f64],
            tracked,
            Op::SoftmaxCrossEntropy {
                logits,
                probs,
                labels: labels.to_vec(),
            },
        ))
    }

    /// Fingerprint of the discrete choices on the tape: ReLU masks,
    /// max-reduction winners and gathered row indices. Two recordings of the
    /// same computation with equal signatures evaluated the same smooth piece
    /// of a piecewise-smooth function. Only tracked nodes are covered.
    pub fn decision_signature(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut mix = |v: u64| {
            for b in v.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        for (i, node) in self.nodes.iter().enumerate() {
            match &node.op {
                Op::Relu(x) => {
                    mix(i as u64);
                    for &v in self.nodes[x.0].value.data() {
                        mix(u64::from(v > 0.0));
                    }
                }
                Op::SegmentMax(_, idx) | Op::RowSelect(_, idx) => {
                    mix(i as u64);
                    mix(idx.len() as u64);
                    for &r in idx {
                        mix(r as u64);
                    }
                }
                _ => {}
            }
        }
        h
    }

    /// Propagates gradients from the scalar `loss` to every tracked node.
    ///
    /// May be called once per recording; call [`Tape::clear`] before the
    /// next forward pass.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.backward_done {
            return Err(Error::Contract(
                "backward already ran on this tape; clear it first".into(),
            ));
        }
        if self.value(loss).len() != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.value(loss).shape()
            )));
        }
        self.backward_done = true;
        self.grads = (0..self.nodes.len()).map(|_| None).collect();
        if !self.tracks(loss) {
            return Ok(());
        }
        self.grads[loss.0] = Some(vec![1.0]);
        for i in (0..=loss.0).rev() {
            let Some(g) = self.grads[i].take() else {
                continue;
            };
            self.apply_rule(i, &g);
            self.grads[i] = Some(g);
        }
        Ok(())
    }

    fn accumulate(&mut self, v: Var, f: impl FnOnce(&mut [f64], &[Node])) {
        if !self.nodes[v.0].value.requires_grad {
            return;
        }
        let len = self.nodes[v.0].value.len();
        let slot = self.grads[v.0].get_or_insert_with(|| vec![0.0; len]);
        f(slot, &self.nodes);
    }

    fn apply_rule(&mut self, i: usize, g: &[f64]) {
        // Temporarily move the op out so the node table can be borrowed.
        let op = core::mem::replace(&mut self.nodes[i].op, Op::Leaf);
        match &op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (n, k) = self.nodes[a.0].value.dims2().unwrap();
                let m = self.nodes[b.0].value.cols();
                self.accumulate(*a, |ga, nodes| {
                    gemm_nt(g, nodes[b.0].value.data(), ga, n, m, k);
                });
                self.accumulate(*b, |gb, nodes| {
                    gemm_tn(nodes[a.0].value.data(), g, gb, n, k, m);
                });
            }
            Op::SpMM(adj, x) => {
                let m = self.nodes[x.0].value.cols();
                self.accumulate(*x, |gx, _| adj.mul_dense_transposed_into(g, m, gx));
            }
            Op::Add(a, b) => {
                self.accumulate(*a, |ga, _| add_into(ga, g));
                self.accumulate(*b, |gb, _| add_into(gb, g));
            }
            Op::AddRow(x, row) => {
                let c = self.nodes[row.0].value.len();
                self.accumulate(*x, |gx, _| add_into(gx, g));
                self.accumulate(*row, |gr, _| {
                    for chunk in g.chunks(c.max(1)) {
                        add_into(gr, chunk);
                    }
                });
            }
            Op::Scale(x, s) => {
                self.accumulate(*x, |gx, _| {
                    for (o, &v) in gx.iter_mut().zip(g) {
                        *o += v * s;
                    }
                });
            }
            Op::ScaleBy(x, s) => {
                let sv = self.nodes[s.0].value.item();
                self.accumulate(*x, |gx, _| {
                    for (o, &v) in gx.iter_mut().zip(g) {
                        *o += v * sv;
                    }
                });
                self.accumulate(*s, |gs, nodes| {
                    gs[0] += dot(nodes[x.0].value.data(), g);
                });
            }
            Op::Mul(a, b) => {
                self.accumulate(*a, |ga, nodes| {
                    for ((o, &v), &bv) in ga.iter_mut().zip(g).zip(nodes[b.0].value.data()) {
                        *o += v * bv;
                    }
                });
                self.accumulate(*b, |gb, nodes| {
                    for ((o, &v), &av) in gb.iter_mut().zip(g).zip(nodes[a.0].value.data()) {
                        *o += v * av;
                    }
                });
            }
            Op::MulCol(x, col) => {
                let c = self.nodes[x.0].value.cols().max(1);
                self.accumulate(*x, |gx, nodes| {
                    let s = nodes[col.0].value.data();
                    for (r, (orow, grow)) in gx.chunks_mut(c).zip(g.chunks(c)).enumerate() {
                        for (o, &v) in orow.iter_mut().zip(grow) {
                            *o += v * s[r];
                        }
                    }
                });
                self.accumulate(*col, |gc, nodes| {
                    let xd = nodes[x.0].value.data();
                    for (r, o) in gc.iter_mut().enumerate() {
                        *o += dot(&xd[r * c..(r + 1) * c], &g[r * c..(r + 1) * c]);
                    }
                });
            }
            Op::Relu(x) => {
                self.accumulate(*x, |gx, nodes| {
                    for ((o, &v), &xv) in gx.iter_mut().zip(g).zip(nodes[x.0].value.data()) {
                        if xv > 0.0 {
                            *o += v;
                        }
                    }
                });
            }
            Op::Tanh(x) => {
                let y = self.nodes[i].value.data().to_vec();
                self.accumulate(*x, |gx, _| {
                    for ((o, &v), &yv) in gx.iter_mut().zip(g).zip(&y) {
                        *o += v * (1.0 - yv * yv);
                    }
                });
            }
            Op::ConcatCols(a, b) => {
                let ca = self.nodes[a.0].value.cols();
                let cb = self.nodes[b.0].value.cols();
                let w = ca + cb;
                self.accumulate(*a, |ga, _| {
                    for (r, orow) in ga.chunks_mut(ca.max(1)).enumerate() {
                        add_into(orow, &g[r * w..r * w + ca]);
                    }
                });
                self.accumulate(*b, |gb, _| {
                    for (r, orow) in gb.chunks_mut(cb.max(1)).enumerate() {
                        add_into(orow, &g[r * w + ca..(r + 1) * w]);
                    }
                });
            }
            Op::RowSelect(x, idx) => {
                let c = self.nodes[x.0].value.cols();
                self.accumulate(*x, |gx, _| {
                    for (r, &src) in idx.iter().enumerate() {
                        add_into(&mut gx[src * c..(src + 1) * c], &g[r * c..(r + 1) * c]);
                    }
                });
            }
            Op::SegmentMean(x, seg) => {
                let c = self.nodes[x.0].value.cols();
                self.accumulate(*x, |gx, _| {
                    for gi in 0..seg.count() {
                        let inv = 1.0 / seg.size(gi) as f64;
                        let grow = &g[gi * c..(gi + 1) * c];
                        for r in seg.range(gi) {
                            for (o, &v) in gx[r * c..(r + 1) * c].iter_mut().zip(grow) {
                                *o += v * inv;
                            }
                        }
                    }
                });
            }
            Op::SegmentMax(x, argmax) => {
                let c = self.nodes[x.0].value.cols();
                self.accumulate(*x, |gx, _| {
                    for (pos, &src) in argmax.iter().enumerate() {
                        gx[src * c + pos % c] += g[pos];
                    }
                });
            }
            Op::Sum(x) => {
                self.accumulate(*x, |gx, _| {
                    for o in gx {
                        *o += g[0];
                    }
                });
            }
            Op::SoftmaxCrossEntropy {
                logits,
                probs,
                labels,
            } => {
                let k = self.nodes[logits.0].value.cols();
                let b = labels.len() as f64;
                self.accumulate(*logits, |gl, _| {
                    for (r, &label) in labels.iter().enumerate() {
                        for j in 0..k {
                            let onehot = if j == label { 1.0 } else { 0.0 };
                            gl[r * k + j] += g[0] * (probs[r * k + j] - onehot) / b;
                        }
                    }
                });
            }
        }
        self.nodes[i].op = op;
    }
}

fn zip_map(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (o, &v) in dst.iter_mut().zip(src) {
        *o += v;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}
