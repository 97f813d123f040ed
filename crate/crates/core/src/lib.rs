//! Extrapolated string-averaging iterations for convex feasibility problems.
//!
//! The building blocks are strictly relaxed cutter operators (relaxed
//! hyperplane and halfspace projections, block Landweber/Kaczmarz steps and
//! subgradient projections). Operators are composed along *strings* and the
//! string endpoints are averaged; the averaged operator is then extrapolated
//! with the largest admissible step size `sigma_max` computed from the
//! intermediate points of each string.
//!
//! The crate is `no_std` and only needs `alloc`. IO, configuration and the
//! benchmark harness live in the `strelax` crate.

#![no_std]
// `!(x > 0.0)` is how NaN gets rejected along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
pub mod linalg;
pub mod operators;
pub mod problems;
pub mod rng;
pub mod solver;
pub mod step_size;
pub mod string_averaging;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
pub use operators::{ConvexFunction, CutterKind, RelaxedCutter};
pub use solver::{
    ConstraintSet, IterationReport, IterationRow, RelaxationSchedule, Status, StoppingRule,
};
pub use step_size::{SigmaForm, StepSizeMode};
pub use string_averaging::{StringPlan, StringTrace};
