//! Block-wise successive approximation for one-sided non-convex min-max problems.
//!
//! The crate solves
//!
//! ```text
//! min_{x_i in X_i} max_{y in Y}  f(x_1, ..., x_K, y) + sum_i h_i(x_i) - g(y)
//! ```
//!
//! where `f` may be non-convex in `x` but is concave in `y`. See [`solver::hibsa_run`].

pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod point;
pub mod problem;
pub mod problems;
pub mod prox;
pub mod schedule;
pub mod solver;
pub mod trace;

pub use diagnostics::{stationarity_gap, GapVector, RateFit};
pub use error::{Error, Result};
pub use point::BlockPoint;
pub use problem::{MinMaxProblem, ProblemConstants};
pub use prox::{ConvexSet, XRegularizer, YRegularizer};
pub use schedule::{Regime, Schedule, ScheduleParams};
pub use solver::{gda_trace, hibsa_run, hibsa_run_default, RunReport, SolverConfig, Surrogate, Termination};
pub use trace::IterateTrace;
