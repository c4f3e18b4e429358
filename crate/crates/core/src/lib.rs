//! Urban structure detection by probabilistic embedding clustering.
//!
//! Places become nodes of a space relation graph (from feature similarity or
//! interaction volumes), biased second-order random walks turn the graph into
//! a corpus, skip-gram with negative sampling turns the corpus into vectors,
//! and the vectors are clustered. Spectral clustering and hierarchical
//! clustering are provided as baselines, and [`eval`] scores any of them
//! against ground truth.

pub mod alias;
pub mod baselines;
pub mod cluster;
pub mod embedder;
pub mod error;
pub mod eval;
pub mod pipeline;
pub mod seed;
pub mod srg;
pub mod synth;
pub mod walker;

pub use error::{PecError, Result};
pub use srg::SpaceRelationGraph;
