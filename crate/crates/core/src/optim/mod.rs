//! Optimizers as step functions over explicit state.
//!
//! [`fanos_step`] advances the friction-adaptive thermostatted momentum
//! method; [`sgd_momentum_step`], [`rmsprop_step`] and [`adamw_step`] are the
//! first-order baselines with PyTorch update conventions. None of them keep
//! hidden state, so independent trials can run on separate threads freely.

mod baselines;
mod clip;
mod fanos;

pub use baselines::{
    adamw_step, rmsprop_step, sgd_momentum_step, AdamWConfig, AdamWState, BaselineState,
    RmsPropConfig, SgdMomentumConfig,
};
pub use clip::{clip_gradient, global_norm};
pub use fanos::{
    fanos_step, target_temperature, FanosConfig, FanosState, FrictionMode, Integrator, MassMode,
    ScheduleMode, ThermostatSample,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimError {
    #[error("dimension mismatch: parameters have {expected} entries, gradient has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite gradient entry at index {index}")]
    NonFiniteGradient { index: usize },
    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(String),
}

pub(crate) fn check_gradient(expected: usize, g: &[f64]) -> Result<(), OptimError> {
    if g.len() != expected {
        return Err(OptimError::DimensionMismatch {
            expected,
            got: g.len(),
        });
    }
    match g.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(OptimError::NonFiniteGradient { index }),
        None => Ok(()),
    }
}
