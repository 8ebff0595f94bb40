//! Accelerated proximal gradient method for composite multiobjective
//! optimization problems `min_x (f_1(x) + g_1(x), ..., f_m(x) + g_m(x))`.
//!
//! - [`problem`]: problem model, Lipschitz bounds, solver configuration
//! - [`prox`]: closed-form proximal operators and the Moreau envelope
//! - [`subproblem`]: the min-max proximal step, solved through its simplex dual
//! - [`solver`]: the accelerated iteration and the `pg`/FISTA baselines
//! - [`merit`]: merit-function lower bounds and rate certificates
//! - [`bench`]: BK1, JOS1 and SP1 benchmarks and multi-start fronts
//! - [`io`]: JSON and CSV formats

// `!(x > 0.0)` guards are intentional: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod error;
pub mod io;
pub mod linalg;
pub mod merit;
pub mod problem;
pub mod prox;
pub mod solver;
pub mod subproblem;

pub use error::{Error, Result};
pub use problem::{
    admissible_s0_bound, lipschitz_bound, validate_config, ConfigViolation, LipschitzMode,
    NonsmoothTerm, ObjectiveVector, Problem, Quadratic, SmoothFunction, SmoothObjective,
    SolverConfig, StopRule,
};
pub use solver::{run, run_baseline, Method, RunTrace, SolverError, StoppingReason};
