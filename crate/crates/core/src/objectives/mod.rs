//! Benchmark objectives and the oscillator stability analyzer.

mod quadratic;
mod rosenbrock;
mod stability;

pub use quadratic::{make_quadratic, QuadraticProblem};
pub use rosenbrock::{rosenbrock, Rosenbrock};
pub use stability::{stability_spectrum, StabilityCase, StabilitySpectrum};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("dimension mismatch: objective has dimension {expected}, point has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{name} needs dimension >= {min}, got {got}")]
    DimensionTooSmall {
        name: &'static str,
        min: usize,
        got: usize,
    },
    #[error("invalid condition number {0}; need kappa >= 1")]
    InvalidConditionNumber(f64),
}

/// A smooth deterministic function with an analytic gradient.
pub trait Objective {
    fn dim(&self) -> usize;

    /// Writes `∇f(x)` into `grad` and returns `f(x)`. Both slices have
    /// length [`Objective::dim`].
    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64;
}

impl<O: Objective + ?Sized> Objective for &O {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        (**self).value_grad(x, grad)
    }
}

/// Wraps an objective and counts every evaluation.
///
/// One instance belongs to one trial; the counter is the gradient-evaluation
/// budget accountant.
#[derive(Debug, Clone)]
pub struct CountingObjective<O> {
    inner: O,
    evals: usize,
}

impl<O: Objective> CountingObjective<O> {
    pub fn new(inner: O) -> Self {
        Self { inner, evals: 0 }
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn eval_count(&self) -> usize {
        self.evals
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }

    /// Evaluates value and gradient, incrementing the counter by one.
    pub fn eval_into(&mut self, x: &[f64], grad: &mut [f64]) -> Result<f64, ObjectiveError> {
        let d = self.inner.dim();
        for len in [x.len(), grad.len()] {
            if len != d {
                return Err(ObjectiveError::DimensionMismatch {
                    expected: d,
                    got: len,
                });
            }
        }
        self.evals += 1;
        Ok(self.inner.value_grad(x, grad))
    }

    pub fn eval(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>), ObjectiveError> {
        let mut grad = vec![0.0; self.inner.dim()];
        let f = self.eval_into(x, &mut grad)?;
        Ok((f, grad))
    }
}
