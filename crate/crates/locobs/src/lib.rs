//! Colored local observation statistics of finite bounded-degree graphs:
//! radius-r balls, stars and cherries, the exact distribution sets behind
//! local-global comparison, and executable versions of the consistency /
//! walk-lifting / ball-reconstruction machinery that relates them.
//!
//! All probabilities are exact rationals (`Rat`); the metric layer is
//! generic over the scalar type via [`scalar::Scalar`].

pub mod canonical;
pub mod consistency;
pub mod error;
pub mod graph;
pub mod scalar;
pub mod search;
pub mod stats;

/// Exact probability scalar used throughout: arbitrary-precision rational.
pub type Rat = num_rational::BigRational;

pub use error::{Error, Result};
pub use graph::{Coloring, Graph, VertexSet};
pub use stats::{Atom, Distribution, DistributionSet, StatKind, Universe};
