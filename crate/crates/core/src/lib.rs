//! Two-dimensional phase unwrapping with redundant arcs.
//!
//! The redundant-arc integer program is non-planar, so it is split into
//! planar subgraphs whose min-cost-flow subproblems are coordinated by
//! Lagrange multipliers updated with a projected subgradient ascent. An
//! exact dense LP oracle and exhaustive enumerators serve as references.

pub mod decomp;
pub mod error;
pub mod graph;
pub mod mcf;
pub mod oracle;
pub mod phase;

pub use error::{Error, Result};
