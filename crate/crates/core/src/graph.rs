//! Graph data model, symmetric adjacency normalization and block-diagonal
//! batching of variable-size graphs.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use crate::tape::Segments;
use crate::tensor::Tensor;

/// `D̃^{-1/2} (A + I) D̃^{-1/2}` in CSR form, where `d̃_i = 1 + degree(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    matrix: Arc<CsrMatrix>,
}

impl NormalizedAdjacency {
    /// Normalizes the 0/1 adjacency given by undirected `edges` over `n`
    /// nodes. Edges must already be validated (in range, no self-pairs,
    /// no duplicates).
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut degree = vec![1.0f64; n];
        for &(i, j) in edges {
            degree[i] += 1.0;
            degree[j] += 1.0;
        }
        let mut triplets = Vec::with_capacity(n + 2 * edges.len());
        for (i, &d) in degree.iter().enumerate() {
            triplets.push((i, i, 1.0 / libm::sqrt(d * d)));
        }
        for &(i, j) in edges {
            let w = 1.0 / libm::sqrt(degree[i] * degree[j]);
            triplets.push((i, j, w));
            triplets.push((j, i, w));
        }
        NormalizedAdjacency {
            matrix: Arc::new(CsrMatrix::from_triplets(n, n, triplets)),
        }
    }

    fn block_diagonal<'a, I: IntoIterator<Item = &'a NormalizedAdjacency>>(parts: I) -> Self {
        NormalizedAdjacency {
            matrix: Arc::new(CsrMatrix::block_diagonal(parts.into_iter().map(|p| &*p.matrix))),
        }
    }

    pub fn matrix(&self) -> &Arc<CsrMatrix> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        self.matrix.to_dense()
    }
}

/// One modality of one sample: node features plus undirected 0/1 edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    node_features: Tensor,
    edges: Vec<(usize, usize)>,
    adjacency: NormalizedAdjacency,
}

impl Graph {
    /// Validates and stores the graph. Edge pairs are canonicalized to
    /// `(min, max)` and sorted; self-pairs, duplicates and out-of-range
    /// indices are rejected.
    pub fn new(node_features: Tensor, edges: Vec<(usize, usize)>) -> Result<Self> {
        let (n, _) = node_features.dims2()?;
        if n == 0 {
            return Err(Error::Validation("graph must have at least one node".into()));
        }
        let mut canon = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            if a.max(b) >= n {
                return Err(Error::Index {
                    op: "graph edge",
                    index: a.max(b),
                    len: n,
                });
            }
            if a == b {
                return Err(Error::Validation(format!("self-pair ({a}, {a}) in edge list")));
            }
            canon.push((a.min(b), a.max(b)));
        }
        canon.sort_unstable();
        if let Some(w) = canon.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Validation(format!(
                "duplicate edge ({}, {})",
                w[0].0, w[0].1
            )));
        }
        let adjacency = NormalizedAdjacency::from_edges(n, &canon);
        Ok(Graph {
            node_features,
            edges: canon,
            adjacency,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_features.rows()
    }

    pub fn feature_dim(&self) -> usize {
        self.node_features.cols()
    }

    pub fn node_features(&self) -> &Tensor {
        &self.node_features
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// The cached normalized propagation operator.
    pub fn adjacency(&self) -> &NormalizedAdjacency {
        &self.adjacency
    }
}

/// Normalizes a graph's adjacency (returns the cached operator).
pub fn normalize_adjacency(g: &Graph) -> NormalizedAdjacency {
    g.adjacency.clone()
}

/// One news item: an image graph, a text graph and a binary label
/// (1 = marketing intention).
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    pub id: String,
    pub image_graph: Graph,
    pub text_graph: Graph,
    label: usize,
}

impl PairedSample {
    pub fn new(id: String, image_graph: Graph, text_graph: Graph, label: usize) -> Result<Self> {
        if label > 1 {
            return Err(Error::Validation(format!(
                "sample `{id}`: label {label} outside {{0, 1}}"
            )));
        }
        Ok(PairedSample {
            id,
            image_graph,
            text_graph,
            label,
        })
    }

    pub fn label(&self) -> usize {
        self.label
    }
}

/// Row segmentation, binary edges and normalized operator of a batch of
/// disjoint graphs. Edge indices are global (batch-wide) row numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    edges: Vec<(usize, usize)>,
    adjacency: NormalizedAdjacency,
    segments: Segments,
}

impl Topology {
    pub fn of_graphs(graphs: &[&Graph]) -> Result<Self> {
        let segments = Segments::from_sizes(graphs.iter().map(|g| g.node_count()))?;
        let mut edges = Vec::with_capacity(graphs.iter().map(|g| g.edges.len()).sum());
        for (gi, g) in graphs.iter().enumerate() {
            let off = segments.range(gi).start;
            edges.extend(g.edges.iter().map(|&(i, j)| (i + off, j + off)));
        }
        let adjacency = NormalizedAdjacency::block_diagonal(graphs.iter().map(|g| &g.adjacency));
        Ok(Topology {
            edges,
            adjacency,
            segments,
        })
    }

    /// Induced subgraph on `kept` (sorted global rows, at least one per
    /// graph), with self-loops re-added and degrees recomputed.
    pub fn induced(&self, kept: &[usize]) -> Result<Self> {
        let n = self.node_count();
        let mut remap = vec![usize::MAX; n];
        let mut sizes = vec![0usize; self.graph_count()];
        let owners = self.segments.owners();
        for (new, &old) in kept.iter().enumerate() {
            if old >= n {
                return Err(Error::Index {
                    op: "induced",
                    index: old,
                    len: n,
                });
            }
            if new > 0 && kept[new - 1] >= old {
                return Err(Error::Contract("kept rows must be strictly increasing".into()));
            }
            remap[old] = new;
            sizes[owners[old]] += 1;
        }
        let segments = Segments::from_sizes(sizes)?;
        let edges: Vec<_> = self
            .edges
            .iter()
            .filter(|&&(i, j)| remap[i] != usize::MAX && remap[j] != usize::MAX)
            .map(|&(i, j)| (remap[i], remap[j]))
            .collect();
        let adjacency = NormalizedAdjacency::from_edges(kept.len(), &edges);
        Ok(Topology {
            edges,
            adjacency,
            segments,
        })
    }

    pub fn node_count(&self) -> usize {
        self.segments.total()
    }

    pub fn graph_count(&self) -> usize {
        self.segments.count()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn adjacency(&self) -> &NormalizedAdjacency {
        &self.adjacency
    }

    pub fn segments(&self) -> &Segments {
        &self.segments
    }

    /// Owning graph of every node row.
    pub fn graph_id(&self) -> Vec<usize> {
        self.segments.owners()
    }
}

/// Stacked node features of several graphs plus their joint topology.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphBatch {
    pub features: Tensor,
    pub topology: Topology,
}

impl GraphBatch {
    pub fn graph_count(&self) -> usize {
        self.topology.graph_count()
    }

    pub fn node_count(&self) -> usize {
        self.topology.node_count()
    }

    pub fn graph_id(&self) -> Vec<usize> {
        self.topology.graph_id()
    }

    pub fn node_range(&self, g: usize) -> core::ops::Range<usize> {
        self.topology.segments.range(g)
    }
}

/// Assembles graphs into one block-diagonal batch.
pub fn batch_graphs(graphs: &[&Graph]) -> Result<GraphBatch> {
    let Some(first) = graphs.first() else {
        return Err(Error::Validation("cannot batch zero graphs".into()));
    };
    let c = first.feature_dim();
    if let Some(g) = graphs.iter().find(|g| g.feature_dim() != c) {
        return Err(Error::Validation(format!(
            "mixed feature dimensions in batch: {c} and {}",
            g.feature_dim()
        )));
    }
    let total: usize = graphs.iter().map(|g| g.node_count()).sum();
    let mut data = Vec::with_capacity(total * c);
    for g in graphs {
        data.extend_from_slice(g.node_features.data());
    }
    Ok(GraphBatch {
        features: Tensor::new(vec![total, c], data)?,
        topology: Topology::of_graphs(graphs)?,
    })
}

/// Mean feature row of every graph in the batch: `[(ΣN)×C] → [G×C]`.
pub fn per_graph_center(batch: &GraphBatch, features: &Tensor) -> Result<Tensor> {
    let (n, c) = features.dims2()?;
    if n != batch.node_count() {
        return Err(Error::shape(
            "per_graph_center",
            &[n, c],
            &[batch.node_count()],
        ));
    }
    let seg = batch.topology.segments();
    let mut out = vec![0.0; seg.count() * c];
    for g in 0..seg.count() {
        let orow = &mut out[g * c..(g + 1) * c];
        for i in seg.range(g) {
            for (o, &v) in orow.iter_mut().zip(features.row(i)) {
                *o += v;
            }
        }
        let size = seg.size(g) as f64;
        for o in orow {
            *o /= size;
        }
    }
    Tensor::new(vec![seg.count(), c], out)
}
