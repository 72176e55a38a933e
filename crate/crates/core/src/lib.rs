//! Simulation of evolution toward sparse linear functions.
//!
//! Representations and targets are [`SparseVector`]s; losses are exact
//! quadratic forms under a [`CovarianceModel`]. The [`framework`] module runs
//! seeded evolutions with either selection rule, and [`oracles`] holds
//! independent checkers for the quantitative lemmas behind convergence.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod covariance;
pub mod distributions;
pub mod error;
pub mod framework;
pub mod model;
pub mod mutators;
pub mod oracles;
pub mod rng;
pub mod vector;

pub use covariance::CovarianceModel;
pub use distributions::{DistributionHandle, SampleBatch};
pub use error::{Error, Result};
pub use model::{ProblemParams, TargetFunction};
pub use vector::SparseVector;
