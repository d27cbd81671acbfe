//! Dataset formats, synthetic data, checkpoints, reports and the CLI
//! plumbing around `cograph-core`.

pub mod checkpoint;
pub mod config;
pub mod record;
pub mod report;
pub mod synth;

pub use cograph_core as core;
