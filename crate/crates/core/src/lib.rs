//! Mining minimal map segments from a view-sequence map.
//!
//! The pipeline builds a bipartite graph between point trajectories and
//! object boxes, subtracts a bias from the edge weights, partitions the graph
//! with a minimum-cost multicut heuristic, and keeps the box-supported
//! components as place classes. The classes are then scored inside a
//! topometric Monte Carlo localization harness.
//!
//! Graph construction, bias selection and the multicut solvers are generic
//! over the edge-weight [`Scalar`]; the aliases below fix the common choices.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod mcl;
pub mod model;
pub mod multicut;
pub mod pipeline;
pub mod placeclass;
pub mod scalar;
pub mod segments;
pub mod synth;
pub mod trackgraph;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Exact rational weight, used to check solver arithmetic without rounding.
pub type Rational = num_rational::Ratio<i64>;

pub type Graph = model::TrajectoryGraph<f64>;
pub type GraphF32 = model::TrajectoryGraph<f32>;
pub type ExactGraph = model::TrajectoryGraph<Rational>;

pub type Builder = trackgraph::GraphBuilder<f64>;
pub type Solution = multicut::SolveResult<f64>;
pub type ExactSolution = multicut::SolveResult<Rational>;
