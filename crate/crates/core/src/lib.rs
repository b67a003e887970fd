//! Constructive tree embedding for Ramsey goodness of bounded-degree trees.
//!
//! Given a red/blue colouring of a complete graph and a bounded-degree tree `T`,
//! the [`engine`] looks for a red copy of `T` or a blue complete multipartite
//! graph `K^{k-1}_s x K^c_m`, and emits a [`engine::Certificate`] that the
//! [`oracle`] can check independently.

pub mod cover;
pub mod embedding;
pub mod engine;
pub mod error;
pub mod extend;
pub mod graph;
pub mod oracle;
pub mod params;
pub mod tree;
pub mod vertex_set;
pub mod vortex;

pub use embedding::Embedding;
pub use error::{Error, Result};
pub use graph::{Graph, TwoColouring};
pub use params::{CheckMode, ParamSet, Policy, SearchConfig};
pub use tree::Tree;
pub use vertex_set::VertexSet;
