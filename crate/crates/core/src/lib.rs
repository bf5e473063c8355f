//! Core numerics for the FANoS benchmark suite.
//!
//! * [`optim`] – the friction-adaptive thermostatted momentum optimizer and
//!   the first-order baselines it is compared against.
//! * [`lbfgs`] – budget-accounted L-BFGS with a strong-Wolfe line search.
//! * [`objectives`] – Rosenbrock, rotated ill-conditioned quadratics and the
//!   linear stability analyzer for oscillator integrators.
//! * [`stats`] – trial records, percentile bootstrap and sweep summaries.
//! * [`rng`] – keyed deterministic random streams.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod lbfgs;
pub mod objectives;
pub mod optim;
pub mod rng;
pub mod stats;

pub use lbfgs::{lbfgs_minimize, LbfgsConfig, LbfgsError, LbfgsRun};
pub use objectives::{CountingObjective, Objective, ObjectiveError, QuadraticProblem, Rosenbrock};
pub use optim::{FanosConfig, FanosState, OptimError};
pub use stats::{SweepSummary, TrialRecord};
