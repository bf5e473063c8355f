//! First-order baselines, following the PyTorch update rules:
//!
//! * SGD with heavy-ball momentum, no dampening, no Nesterov:
//!   `b <- mu * b + g`, `θ <- θ - lr * b`.
//! * RMSProp without momentum, centering or bias correction:
//!   `sq <- alpha * sq + (1 - alpha) * g²`, `θ <- θ - lr * g / (sqrt(sq) + eps)`.
//! * AdamW with bias correction and decoupled decay applied before the
//!   moment step: `θ <- θ (1 - lr * wd)`, then
//!   `θ <- θ - (lr / bc1) * m / (sqrt(v) / sqrt(bc2) + eps)`.

use super::{check_gradient, OptimError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdMomentumConfig {
    pub lr: f64,
    pub momentum: f64,
}

impl Default for SgdMomentumConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            momentum: 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmsPropConfig {
    pub lr: f64,
    pub alpha: f64,
    pub eps: f64,
}

impl Default for RmsPropConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            alpha: 0.99,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamWState {
    pub exp_avg: Vec<f64>,
    pub exp_avg_sq: Vec<f64>,
    pub step: u64,
}

/// Optimizer buffers for one baseline run. Every buffer has the dimension
/// of the parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub enum BaselineState {
    SgdMomentum { buf: Vec<f64> },
    RmsProp { square_avg: Vec<f64> },
    AdamW(AdamWState),
}

impl BaselineState {
    pub fn sgd_momentum(d: usize) -> Self {
        Self::SgdMomentum { buf: vec![0.0; d] }
    }

    pub fn rmsprop(d: usize) -> Self {
        Self::RmsProp {
            square_avg: vec![0.0; d],
        }
    }

    pub fn adamw(d: usize) -> Self {
        Self::AdamW(AdamWState {
            exp_avg: vec![0.0; d],
            exp_avg_sq: vec![0.0; d],
            step: 0,
        })
    }
}

fn check_dims(theta: &[f64], buf: &[f64], g: &[f64]) -> Result<(), OptimError> {
    if buf.len() != theta.len() {
        return Err(OptimError::DimensionMismatch {
            expected: theta.len(),
            got: buf.len(),
        });
    }
    check_gradient(theta.len(), g)
}

pub fn sgd_momentum_step(
    theta: &mut [f64],
    buf: &mut [f64],
    g: &[f64],
    lr: f64,
    mu: f64,
) -> Result<(), OptimError> {
    check_dims(theta, buf, g)?;
    for ((t, b), gi) in theta.iter_mut().zip(buf.iter_mut()).zip(g) {
        *b = mu * *b + gi;
        *t -= lr * *b;
    }
    Ok(())
}

pub fn rmsprop_step(
    theta: &mut [f64],
    square_avg: &mut [f64],
    g: &[f64],
    lr: f64,
    alpha: f64,
    eps: f64,
) -> Result<(), OptimError> {
    check_dims(theta, square_avg, g)?;
    for ((t, sq), gi) in theta.iter_mut().zip(square_avg.iter_mut()).zip(g) {
        *sq = alpha * *sq + (1.0 - alpha) * gi * gi;
        *t -= lr * gi / (sq.sqrt() + eps);
    }
    Ok(())
}

pub fn adamw_step(
    theta: &mut [f64],
    state: &mut AdamWState,
    g: &[f64],
    cfg: &AdamWConfig,
) -> Result<(), OptimError> {
    check_dims(theta, &state.exp_avg, g)?;
    check_dims(theta, &state.exp_avg_sq, g)?;
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2_sqrt = (1.0 - cfg.beta2.powi(t)).sqrt();
    let step_size = cfg.lr / bc1;
    let decay = 1.0 - cfg.lr * cfg.weight_decay;
    for i in 0..theta.len() {
        theta[i] *= decay;
        let m = cfg.beta1 * state.exp_avg[i] + (1.0 - cfg.beta1) * g[i];
        let v = cfg.beta2 * state.exp_avg_sq[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        state.exp_avg[i] = m;
        state.exp_avg_sq[i] = v;
        theta[i] -= step_size * m / (v.sqrt() / bc2_sqrt + cfg.eps);
    }
    Ok(())
}
