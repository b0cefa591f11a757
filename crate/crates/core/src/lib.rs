//! Cumulative merging partitions on weighted graphs, the random graph models
//! they are studied on, the contact process, and Monte Carlo drivers.
//!
//! The core types are generic over the vertex weight type ([`Weight`]).
//! Integer weights (`u64`) and rationals compare exactly; floats compare by
//! flooring `r^alpha`.

pub mod cmp;
pub mod contact;
pub mod experiments;
pub mod generators;
pub mod graph;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod verify;
pub mod wgraph;

pub use cmp::{CmpConfig, CmpResult};
pub use graph::{Graph, GraphError, Vertex, VertexSet, WeightedGraph};
pub use rng::StreamRng;
pub use scalar::{Exponent, Rational, Weight};

/// Graph with integer weights, compared exactly.
pub type ExactGraph = WeightedGraph<u64>;
/// Graph with double-precision weights.
pub type FloatGraph = WeightedGraph<f64>;
/// Graph with single-precision weights.
pub type Float32Graph = WeightedGraph<f32>;
/// Graph with arbitrary-precision rational weights.
pub type RationalGraph = WeightedGraph<num_rational::BigRational>;

pub type ExactCmp = CmpResult<u64>;
pub type FloatCmp = CmpResult<f64>;
pub type RationalCmp = CmpResult<num_rational::BigRational>;
