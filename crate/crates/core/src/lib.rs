//! Robust design optimization by Gaussian smoothing of a nearest-neighbor
//! surrogate.
//!
//! The crate is `no_std` (with `alloc`) and carries the whole numerical
//! pipeline: the scaled design box, Latin hypercube / truncated normal /
//! Sobol point generators, a k-d tree nearest-neighbor interpolant, Monte
//! Carlo estimators of the smoothed objective and its derivatives, the
//! trust-region sub-problem solver, the move-limit driver, analytic
//! benchmark objectives, and a reduced cohesive-zone delamination model.
//! IO, configuration and parallel execution live in the `smoothopt` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cohesive;
pub mod dataset;
pub mod error;
pub(crate) mod linalg;
pub mod objectives;
pub mod optimizer;
pub mod sampling;
pub mod smoothing;
pub mod space;
pub mod subproblem;

pub use dataset::{EvaluationRecord, NnIndex, NnMatch, RecordTag};
pub use error::{Error, Result};
pub use objectives::{Objective, ScalarField};
pub use optimizer::{MoveLimitConfig, OptimizerState, RunReport, StepOutcome};
pub use sampling::{SeededStream, SobolSet};
pub use smoothing::{AnchoredEstimator, Derivatives, Estimate, NormalPointSet, SmoothingConfig, Weighting};
pub use space::{BoxKind, DesignSpace, ExtendedBox};
pub use subproblem::{RegionOfInterest, SubproblemResult, Termination};
