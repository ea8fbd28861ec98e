//! Probabilistic zero-forcing on graphs: graph families, a seeded
//! synchronous simulator with rule variants, an exact absorbing-chain
//! solver for small graphs, a Monte Carlo harness, closed-form bounds and
//! report serialization.

pub mod bounds;
pub mod error;
pub mod exact;
pub mod forcing;
pub mod graph;
pub mod harness;
pub mod report;
pub mod rng;

pub use error::{Error, Result};
pub use forcing::{ColorState, ForcingRule, TrialRecord};
pub use graph::{Graph, GraphFamilySpec, VertexSet};
