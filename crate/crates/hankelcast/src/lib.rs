//! Data-driven prediction for discrete-time LTI systems.
//!
//! One recorded input/output trajectory of an unknown linear time-invariant
//! system, a short recent history, and a sequence of future inputs are often
//! enough to pin the future outputs down exactly, without ever identifying a
//! model. This crate implements that workflow on Hankel matrices of the
//! records:
//!
//! - [`lti`]: state-space models, trajectories, observability, lag, and
//!   membership tests, used both as ground truth and as a modeling tool;
//! - [`hankel`]: Hankel matrices, mosaics of them, the past/future stack
//!   partition, numerical rank, and persistency of excitation;
//! - [`predict`]: the one-shot predictor, the step-by-step weaving
//!   predictor, trajectory splicing, and the report on when a returned
//!   prediction is guaranteed unique;
//! - [`verify`]: independent oracles (an explaining-system family, a
//!   kernel-based uniqueness test, direct recursion simulation) used to
//!   cross-check the solver.
//!
//! Everything is generic over the scalar type through [`Real`]; the `*64`
//! aliases fix `f64`, the precision the bundled command line tool uses.
//!
//! Degenerate shapes are first-class throughout: a record shorter than the
//! window it is asked to fill produces Hankel matrices with zero columns,
//! and the solver then reports an infeasible (not erroneous) prediction.
//! That convention is load-bearing for the weaving predictor, which starts
//! from histories too short to fill any window.

pub mod error;
pub mod hankel;
mod linalg;
pub mod lti;
pub mod predict;
pub mod scalar;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Real;

// Downstream code needs the matrix types to build inputs.
pub use nalgebra;

/// Singular values at or below `tol * max(nrows, ncols) * sigma_max` count
/// as zero, everywhere a rank decision is made.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// A prediction solve is feasible when its relative residual
/// `|a g - b| / max(1, |b|)` stays within this.
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-8;

/// Absolute entrywise deviation allowed on the overlap of woven
/// trajectories.
pub const OVERLAP_TOL: f64 = 1e-9;

/// The uniqueness certificate holds when the future-output rows map the
/// solve's kernel below this, relative to `max(1, |Y_f|)`.
pub const CERTIFICATE_TOL: f64 = 1e-9;

/// Double-precision instantiations, matching the command line tool.
pub type StateSpace64 = lti::StateSpace<f64>;
pub type Trajectory64 = lti::Trajectory<f64>;
pub type HankelBlock64 = hankel::HankelBlock<f64>;
pub type PredictionProblem64 = predict::PredictionProblem<f64>;
pub type PredictionOutcome64 = predict::PredictionOutcome<f64>;

/// Single-precision instantiations.
pub type StateSpace32 = lti::StateSpace<f32>;
pub type Trajectory32 = lti::Trajectory<f32>;
pub type HankelBlock32 = hankel::HankelBlock<f32>;
pub type PredictionProblem32 = predict::PredictionProblem<f32>;
pub type PredictionOutcome32 = predict::PredictionOutcome<f32>;
