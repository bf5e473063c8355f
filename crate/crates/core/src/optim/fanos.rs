use super::{check_gradient, global_norm, OptimError};

/// How the per-coordinate mass is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MassMode {
    /// `m = sqrt(s) + eps` from the squared-gradient EMA.
    Rms,
    /// `m = 1`.
    Identity,
}

/// Which velocity drives the position update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    /// Position moves with the freshly updated velocity (symplectic Euler).
    SemiImplicit,
    /// Position moves with the velocity from before the update.
    ExplicitEuler,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrictionMode {
    /// Friction follows the integral feedback on kinetic energy.
    Thermostat,
    /// Friction is pinned to the given value; the temperature EMA is still
    /// tracked so diagnostics stay comparable.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleMode {
    /// `T0(k) = T_min + (T_max - T_min) exp(-k / tau)`.
    Exponential,
    /// `T0(k) = T_max`.
    Constant,
}

/// Hyperparameters of the friction-adaptive optimizer.
///
/// `Default` carries the released settings: `beta = 0.999`, `eps = 1e-8`,
/// `q = 1`, `t_max = 1e-3`, `t_min = 0`, `tau = 20000`, `rho_t = 0.9`,
/// `zeta_max = 10` and global-norm clipping at `c = 1`.
///
/// Nothing guards `1 - lr * zeta` against going non-positive. With the
/// defaults `lr * zeta_max <= 1` for every learning rate up to `0.1`, where
/// the factor can reach exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FanosConfig {
    pub lr: f64,
    pub beta: f64,
    pub eps: f64,
    pub q: f64,
    pub t_max: f64,
    pub t_min: f64,
    pub tau: f64,
    pub rho_t: f64,
    pub zeta_max: f64,
    pub grad_clip: Option<f64>,
    pub mass_mode: MassMode,
    pub integrator: Integrator,
    pub friction_mode: FrictionMode,
    pub schedule_mode: ScheduleMode,
}

impl Default for FanosConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta: 0.999,
            eps: 1e-8,
            q: 1.0,
            t_max: 1e-3,
            t_min: 0.0,
            tau: 20000.0,
            rho_t: 0.9,
            zeta_max: 10.0,
            grad_clip: Some(1.0),
            mass_mode: MassMode::Rms,
            integrator: Integrator::SemiImplicit,
            friction_mode: FrictionMode::Thermostat,
            schedule_mode: ScheduleMode::Exponential,
        }
    }
}

impl FanosConfig {
    pub fn with_lr(mut self, lr: f64) -> Self {
        self.lr = lr;
        self
    }

    pub fn validate(&self) -> Result<(), OptimError> {
        let bad = |msg: String| Err(OptimError::InvalidConfig(msg));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return bad(format!("beta must lie in [0, 1), got {}", self.beta));
        }
        if !(self.eps > 0.0) {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        if !(self.q > 0.0) {
            return bad(format!("q must be positive, got {}", self.q));
        }
        if !(self.t_min >= 0.0 && self.t_max >= self.t_min) {
            return bad(format!(
                "need 0 <= t_min <= t_max, got t_min={} t_max={}",
                self.t_min, self.t_max
            ));
        }
        if !(self.tau > 0.0) {
            return bad(format!("tau must be positive, got {}", self.tau));
        }
        if !(0.0..1.0).contains(&self.rho_t) {
            return bad(format!("rho_t must lie in [0, 1), got {}", self.rho_t));
        }
        if !(self.zeta_max > 0.0) {
            return bad(format!("zeta_max must be positive, got {}", self.zeta_max));
        }
        if let Some(c) = self.grad_clip {
            if !(c > 0.0) {
                return bad(format!("gradient clip threshold must be positive, got {c}"));
            }
        }
        if let FrictionMode::Fixed(z) = self.friction_mode {
            if !(z.is_finite() && z.abs() <= self.zeta_max) {
                return bad(format!("fixed friction {z} outside [-zeta_max, zeta_max]"));
            }
        }
        Ok(())
    }
}

/// Target temperature at step `k`.
pub fn target_temperature(k: u64, cfg: &FanosConfig) -> f64 {
    match cfg.schedule_mode {
        ScheduleMode::Constant => cfg.t_max,
        ScheduleMode::Exponential => {
            cfg.t_min + (cfg.t_max - cfg.t_min) * (-(k as f64) / cfg.tau).exp()
        }
    }
}

/// Mutable state of one optimizer run.
#[derive(Debug, Clone, PartialEq)]
pub struct FanosState {
    pub theta: Vec<f64>,
    pub v: Vec<f64>,
    /// EMA of squared gradients; never negative.
    pub s: Vec<f64>,
    pub zeta: f64,
    pub t_ema: f64,
    /// Kinetic-energy proxy computed by the most recent step.
    pub t_inst: f64,
    pub k: u64,
}

impl FanosState {
    /// Fresh state at `theta`: zero velocity and EMA, `T_ema = T_max`.
    /// Friction starts at zero, or at the pinned value in fixed mode.
    pub fn new(theta: Vec<f64>, cfg: &FanosConfig) -> Self {
        let d = theta.len();
        let zeta = match cfg.friction_mode {
            FrictionMode::Thermostat => 0.0,
            FrictionMode::Fixed(z) => z,
        };
        Self {
            theta,
            v: vec![0.0; d],
            s: vec![0.0; d],
            zeta,
            t_ema: cfg.t_max,
            t_inst: 0.0,
            k: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }
}

/// Thermostat quantities produced by one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermostatSample {
    /// Step index the sample belongs to (value of `k` before the step).
    pub step: u64,
    /// Friction after the update.
    pub zeta: f64,
    pub t_inst: f64,
    pub t_ema: f64,
    /// `T0(step)` used in the friction update.
    pub t_target: f64,
}

/// One optimizer step with gradient `g` evaluated at `state.theta`.
///
/// Order of operations: optional global-norm clip, squared-gradient EMA,
/// mass, damped velocity update, position update, kinetic-energy proxy from
/// the new mass and velocity, temperature EMA, friction update.
#[allow(clippy::needless_range_loop)]
pub fn fanos_step(
    state: &mut FanosState,
    g: &[f64],
    cfg: &FanosConfig,
) -> Result<ThermostatSample, OptimError> {
    let d = state.dim();
    check_gradient(d, g)?;
    if state.v.len() != d || state.s.len() != d {
        return Err(OptimError::DimensionMismatch {
            expected: d,
            got: state.v.len().min(state.s.len()),
        });
    }

    let h = cfg.lr;
    let scale = match cfg.grad_clip {
        Some(c) => (c / (global_norm(g) + 1e-12)).min(1.0),
        None => 1.0,
    };
    let damping = 1.0 - h * state.zeta;

    let mut kinetic = 0.0;
    for i in 0..d {
        let gi = g[i] * scale;
        let s = cfg.beta * state.s[i] + (1.0 - cfg.beta) * gi * gi;
        state.s[i] = s;
        let m = match cfg.mass_mode {
            MassMode::Rms => s.sqrt() + cfg.eps,
            MassMode::Identity => 1.0,
        };
        let v_old = state.v[i];
        let v_new = damping * v_old - h * gi / m;
        state.v[i] = v_new;
        state.theta[i] += match cfg.integrator {
            Integrator::SemiImplicit => h * v_new,
            Integrator::ExplicitEuler => h * v_old,
        };
        kinetic += m * v_new * v_new;
    }

    let t_inst = if d == 0 { 0.0 } else { kinetic / d as f64 };
    state.t_inst = t_inst;
    state.t_ema = cfg.rho_t * state.t_ema + (1.0 - cfg.rho_t) * t_inst;

    let t_target = target_temperature(state.k, cfg);
    state.zeta = match cfg.friction_mode {
        FrictionMode::Thermostat => {
            (state.zeta + (h / cfg.q) * (state.t_ema - t_target)).clamp(-cfg.zeta_max, cfg.zeta_max)
        }
        FrictionMode::Fixed(z) => z,
    };

    let sample = ThermostatSample {
        step: state.k,
        zeta: state.zeta,
        t_inst,
        t_ema: state.t_ema,
        t_target,
    };
    state.k += 1;
    Ok(sample)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_cfg() -> FanosConfig {
        FanosConfig {
            lr: 0.1,
            beta: 0.0,
            rho_t: 0.9,
            grad_clip: None,
            ..FanosConfig::default()
        }
    }

    #[test]
    fn defaults_match_released_values() {
        let c = FanosConfig::default();
        assert_eq!(c.beta, 0.999);
        assert_eq!(c.eps, 1e-8);
        assert_eq!(c.q, 1.0);
        assert_eq!(c.t_max, 1e-3);
        assert_eq!(c.t_min, 0.0);
        assert_eq!(c.tau, 20000.0);
        assert_eq!(c.rho_t, 0.9);
        assert_eq!(c.zeta_max, 10.0);
        assert_eq!(c.grad_clip, Some(1.0));
        c.validate().unwrap();
    }

    #[test]
    fn target_schedule_endpoints() {
        let c = FanosConfig::default();
        assert_eq!(target_temperature(0, &c), 1e-3);
        let at_tau = target_temperature(20000, &c);
        assert!((at_tau - 1e-3 * (-1.0f64).exp()).abs() < 1e-18);
        assert!((at_tau - 3.6788e-4).abs() < 1e-8);
        assert!(target_temperature(10_000_000, &c) < 1e-200);
        let constant = FanosConfig {
            schedule_mode: ScheduleMode::Constant,
            ..c
        };
        assert_eq!(target_temperature(123_456, &constant), 1e-3);
    }

    #[test]
    fn target_schedule_non_increasing() {
        let c = FanosConfig::default();
        let mut prev = f64::INFINITY;
        for k in (0..200_000).step_by(997) {
            let t = target_temperature(k, &c);
            assert!(t <= prev);
            prev = t;
        }
    }

    #[test]
    fn scalar_hand_trace() {
        // f = θ²/2 at θ = 1, so g = 1.
        let cfg = scalar_cfg();
        let mut st = FanosState::new(vec![1.0], &cfg);
        let out = fanos_step(&mut st, &[1.0], &cfg).unwrap();

        let s = 1.0;
        let m = 1.0 + 1e-8;
        let v = -0.1 * 1.0 / m;
        let theta = 1.0 + 0.1 * v;
        let t_inst = m * v * v;
        let t_ema = 0.9 * 1e-3 + 0.1 * t_inst;
        let zeta = 0.1 * (t_ema - 1e-3);

        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        assert_eq!(st.s[0], s);
        assert!(rel(st.v[0], v) < 1e-12);
        assert!(rel(st.theta[0], theta) < 1e-12);
        assert!(rel(out.t_inst, t_inst) < 1e-12);
        assert!(rel(st.t_ema, t_ema) < 1e-12);
        assert!(rel(st.zeta, zeta) < 1e-12);
        // rounded figures
        assert!((st.theta[0] - 0.99).abs() < 1e-9);
        assert!((st.t_ema - 1.9e-3).abs() < 1e-10);
        assert!((st.zeta - 9e-5).abs() < 1e-11);
        assert_eq!(st.k, 1);
        assert_eq!(out.step, 0);
    }

    #[test]
    fn zero_gradient_zero_velocity_moves_nothing() {
        let cfg = FanosConfig::default();
        let mut st = FanosState::new(vec![0.5, -1.5, 2.0], &cfg);
        let before = st.theta.clone();
        let out = fanos_step(&mut st, &[0.0; 3], &cfg).unwrap();
        assert_eq!(st.theta, before);
        assert_eq!(st.v, vec![0.0; 3]);
        assert_eq!(out.t_inst, 0.0);
        // T_ema decays toward 0 while T0 stays at T_max on step 0.
        let expected = (cfg.lr / cfg.q) * (0.9 * 1e-3 - 1e-3);
        assert!((st.zeta - expected).abs() < 1e-18);
        assert!(st.zeta < 0.0);
    }

    #[test]
    fn all_extras_off_is_symplectic_euler() {
        let cfg = FanosConfig {
            lr: 0.05,
            grad_clip: None,
            mass_mode: MassMode::Identity,
            friction_mode: FrictionMode::Fixed(0.0),
            ..FanosConfig::default()
        };
        let mut st = FanosState::new(vec![1.0, -2.0], &cfg);
        st.v = vec![0.3, 0.1];
        let g = [0.7, -0.2];
        let (mut th, mut v) = (st.theta.clone(), st.v.clone());
        fanos_step(&mut st, &g, &cfg).unwrap();
        for i in 0..2 {
            v[i] -= 0.05 * g[i];
            th[i] += 0.05 * v[i];
        }
        assert_eq!(st.v, v);
        assert_eq!(st.theta, th);
    }

    #[test]
    fn explicit_euler_uses_old_velocity() {
        let cfg = FanosConfig {
            lr: 0.1,
            integrator: Integrator::ExplicitEuler,
            ..scalar_cfg()
        };
        let mut st = FanosState::new(vec![1.0], &cfg);
        fanos_step(&mut st, &[1.0], &cfg).unwrap();
        // v_old = 0, so the first step leaves θ in place.
        assert_eq!(st.theta[0], 1.0);
        assert!(st.v[0] < 0.0);
    }

    #[test]
    fn fixed_friction_is_pinned() {
        let cfg = FanosConfig {
            friction_mode: FrictionMode::Fixed(5.0),
            ..FanosConfig::default()
        };
        let mut st = FanosState::new(vec![1.0, 1.0], &cfg);
        assert_eq!(st.zeta, 5.0);
        for _ in 0..10 {
            fanos_step(&mut st, &[3.0, -1.0], &cfg).unwrap();
            assert_eq!(st.zeta, 5.0);
        }
        assert!(st.t_ema != cfg.t_max);
    }

    #[test]
    fn rejects_bad_gradients() {
        let cfg = FanosConfig::default();
        let mut st = FanosState::new(vec![0.0; 3], &cfg);
        assert_eq!(
            fanos_step(&mut st, &[1.0, 2.0], &cfg),
            Err(OptimError::DimensionMismatch {
                expected: 3,
                got: 2
            })
        );
        assert_eq!(
            fanos_step(&mut st, &[1.0, f64::NAN, 0.0], &cfg),
            Err(OptimError::NonFiniteGradient { index: 1 })
        );
        assert_eq!(st.k, 0);
    }

    #[test]
    fn config_validation() {
        let ok = FanosConfig::default();
        assert!(FanosConfig {
            lr: 0.0,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(FanosConfig {
            beta: 1.0,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(FanosConfig {
            t_min: 1.0,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(FanosConfig {
            rho_t: -0.1,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(FanosConfig {
            grad_clip: Some(0.0),
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(FanosConfig {
            friction_mode: FrictionMode::Fixed(11.0),
            ..ok
        }
        .validate()
        .is_err());
    }
}
