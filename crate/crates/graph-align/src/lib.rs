//! Unsupervised alignment of two networks, accelerated by graph
//! compression.
//!
//! The pipeline embeds both graphs in one space with an untrained
//! graph-convolution forward pass over log-binned degree features, uses
//! the embeddings to pick consistent compression starting points in both
//! graphs, collapses minimum-degree neighborhoods into supernodes until a
//! target ratio is met, and then matches nodes, supernodes and the
//! sub-nodes inside matched supernodes by exponential-distance similarity.
//!
//! Most entry points live in [`pipeline`]; the lower-level stages are
//! usable on their own:
//!
//! - [`graph`]: edge-list ingestion and neighborhood queries
//! - [`synth`]: permutations, noise models and generators with ground truth
//! - [`features`]: structural and attribute feature extraction
//! - [`embed`]: the shared-space forward pass
//! - [`compress`]: guiding lists and minimum-degree-neighbor merging
//! - [`align`]: similarity search, candidate ranking and scoring
//!
//! See the `examples/` directory for one runnable program per stage.

pub mod align;
pub mod compress;
pub mod embed;
pub mod error;
pub mod features;
pub mod graph;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{Graph, NodeId};
pub use pipeline::{run_align, run_grid, RunConfig};
