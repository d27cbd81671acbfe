//! Collaborative two-branch graph classifier over paired image/text node
//! sets: reverse-mode autodiff, graph construction, GCN/fusion/pooling
//! layers, model variants, Adam training and evaluation.
//!
//! `no_std` with `alloc`. File formats, CLI and data generation live in the
//! `cograph` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod compare;
pub mod construct;
pub mod error;
pub mod gradcheck;
pub mod graph;
pub mod layers;
pub mod model;
pub mod optim;
pub mod rng;
pub mod sparse;
pub mod tape;
pub mod tensor;
pub mod train;

pub use compare::{run_comparison, split_dataset, ComparisonTable, Splits};
pub use construct::{build_graph, build_sample, cosine_similarity, kept_edge_count};
pub use error::{Error, Result};
pub use graph::{batch_graphs, normalize_adjacency, Graph, GraphBatch, NormalizedAdjacency, PairedSample};
pub use model::{Model, ModelConfig, Variant, NUM_CLASSES};
pub use optim::{Adam, AdamConfig, Param};
pub use sparse::CsrMatrix;
pub use tape::{Segments, Tape, Var};
pub use tensor::Tensor;
pub use train::{evaluate, train, EpochRecord, MetricsReport, TrainConfig, TrainOutcome};
