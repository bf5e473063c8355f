//! Single-trial execution.

use std::time::Instant;

use fanos_core::lbfgs::{lbfgs_minimize, LbfgsConfig, Termination};
use fanos_core::objectives::{
    make_quadratic, CountingObjective, Objective, QuadraticProblem, Rosenbrock,
};
use fanos_core::optim::{
    adamw_step, clip_gradient, fanos_step, rmsprop_step, sgd_momentum_step, AdamWConfig,
    BaselineState, FanosConfig, FanosState, OptimError, RmsPropConfig, SgdMomentumConfig,
    ThermostatSample,
};
use fanos_core::rng;
use fanos_core::stats::{is_divergent_loss, TrialRecord, DEFAULT_DIVERGENCE_THRESHOLD};

use crate::error::{HarnessError, Result};
use crate::method::Method;

pub const MAX_TRACE_POINTS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Benchmark {
    Rosenbrock { d: usize },
    Quadratic { kappa: f64, d: usize },
}

impl Benchmark {
    pub const ROSENBROCK_100: Benchmark = Benchmark::Rosenbrock { d: 100 };

    pub fn quadratic(kappa: f64) -> Self {
        Benchmark::Quadratic { kappa, d: 100 }
    }

    pub fn name(&self) -> String {
        match self {
            Benchmark::Rosenbrock { d } => format!("rosenbrock{d}"),
            Benchmark::Quadratic { d, .. } if *d == 100 => "quadratic".to_string(),
            Benchmark::Quadratic { d, .. } => format!("quadratic{d}"),
        }
    }

    pub fn kappa(&self) -> Option<f64> {
        match self {
            Benchmark::Quadratic { kappa, .. } => Some(*kappa),
            Benchmark::Rosenbrock { .. } => None,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Benchmark::Rosenbrock { d } | Benchmark::Quadratic { d, .. } => *d,
        }
    }

    /// Objective instance for `seed`; quadratics draw a fresh eigenbasis per
    /// seed.
    pub fn problem(&self, seed: u64) -> Result<Problem> {
        Ok(match *self {
            Benchmark::Rosenbrock { d } => Problem::Rosenbrock(Rosenbrock::new(d)?),
            Benchmark::Quadratic { kappa, d } => {
                Problem::Quadratic(make_quadratic(kappa, d, seed)?)
            }
        })
    }

    /// Starting point shared by all methods and benchmarks at this seed.
    pub fn initial_point(&self, seed: u64) -> Vec<f64> {
        rng::initial_point(seed, self.dim())
    }
}

#[derive(Debug, Clone)]
pub enum Problem {
    Rosenbrock(Rosenbrock),
    Quadratic(QuadraticProblem),
}

impl Objective for Problem {
    fn dim(&self) -> usize {
        match self {
            Problem::Rosenbrock(p) => p.dim(),
            Problem::Quadratic(p) => p.dim(),
        }
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        match self {
            Problem::Rosenbrock(p) => p.value_grad(x, grad),
            Problem::Quadratic(p) => p.value_grad(x, grad),
        }
    }
}

/// Hyperparameters shared by every trial of a run. Learning rates come from
/// the trial itself.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSettings {
    pub fanos: FanosConfig,
    pub sgd_momentum: f64,
    pub rmsprop_alpha: f64,
    pub rmsprop_eps: f64,
    pub adamw: AdamWConfig,
    /// Global-norm threshold of the `+clip` baselines.
    pub baseline_clip: f64,
    pub lbfgs: LbfgsConfig,
    pub divergence_threshold: f64,
    pub record_thermostat: bool,
}

impl Default for TrialSettings {
    fn default() -> Self {
        let rms = RmsPropConfig::default();
        Self {
            fanos: FanosConfig::default(),
            sgd_momentum: SgdMomentumConfig::default().momentum,
            rmsprop_alpha: rms.alpha,
            rmsprop_eps: rms.eps,
            adamw: AdamWConfig::default(),
            baseline_clip: 1.0,
            lbfgs: LbfgsConfig::default(),
            divergence_threshold: DEFAULT_DIVERGENCE_THRESHOLD,
            record_thermostat: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialSpec {
    pub method: Method,
    /// Name written to the record; defaults to the method name.
    pub label: String,
    pub benchmark: Benchmark,
    pub lr: f64,
    pub seed: u64,
    pub budget: usize,
}

impl TrialSpec {
    pub fn new(method: Method, benchmark: Benchmark, lr: f64, seed: u64, budget: usize) -> Self {
        Self {
            method,
            label: method.name().to_string(),
            benchmark,
            lr,
            seed,
            budget,
        }
    }
}

/// Evaluation indices kept in the loss trace: at most `max_points - 1`
/// evenly spaced over `[0, budget)`, leaving room for the final evaluation.
fn is_trace_point(k: usize, budget: usize, max_points: usize) -> bool {
    let slots = max_points.saturating_sub(1).max(1);
    if budget <= slots {
        return true;
    }
    // k is kept iff it is the first index of its slot
    let slot = k * slots / budget;
    k == 0 || (k - 1) * slots / budget != slot
}

fn thin_trace(trace: &[(u64, f64)], max_points: usize) -> Vec<(u64, f64)> {
    if trace.len() <= max_points {
        return trace.to_vec();
    }
    let n = trace.len();
    let mut out: Vec<(u64, f64)> = (0..max_points - 1)
        .map(|i| trace[i * (n - 1) / (max_points - 1)])
        .collect();
    out.push(trace[n - 1]);
    out
}

enum Stepper {
    Fanos(FanosConfig, Box<FanosState>),
    Baseline(BaselineState),
}

/// Runs one trial for exactly `budget` gradient evaluations (fewer only if
/// the trajectory diverges, or L-BFGS converges or stalls).
pub fn run_trial(spec: &TrialSpec, settings: &TrialSettings) -> Result<TrialRecord> {
    if spec.budget == 0 {
        return Err(HarnessError::InvalidPlan(
            "budget must be at least 1".into(),
        ));
    }
    if !(spec.lr > 0.0 && spec.lr.is_finite()) {
        return Err(HarnessError::InvalidPlan(format!(
            "learning rate {} is not positive",
            spec.lr
        )));
    }
    let started = Instant::now();
    let problem = spec.benchmark.problem(spec.seed)?;
    let x0 = spec.benchmark.initial_point(spec.seed);
    let mut objective = CountingObjective::new(problem);

    let mut record = TrialRecord {
        benchmark: spec.benchmark.name(),
        method: spec.label.clone(),
        lr: spec.lr,
        seed: spec.seed,
        kappa: spec.benchmark.kappa(),
        final_loss: None,
        loss_trace: Vec::new(),
        eval_count: 0,
        thermostat_trace: None,
        wall_time: 0.0,
    };

    if spec.method == Method::Lbfgs {
        let cfg = LbfgsConfig {
            lr: spec.lr,
            budget: spec.budget,
            ..settings.lbfgs.clone()
        };
        let run = lbfgs_minimize(&mut objective, &x0, &cfg)?;
        if run.termination == Termination::NonFiniteStart {
            return Err(HarnessError::NonFiniteInitialLoss(run.value));
        }
        let threshold = settings.divergence_threshold;
        let diverged = run
            .trace
            .iter()
            .any(|&(_, f)| is_divergent_loss(f, threshold));
        // trace indices become 0-based evaluation indices
        let trace: Vec<(u64, f64)> = run.trace.iter().map(|&(n, f)| (n - 1, f)).collect();
        record.loss_trace = thin_trace(&trace, MAX_TRACE_POINTS);
        record.final_loss = (!diverged).then_some(run.value);
        record.eval_count = objective.eval_count();
        record.wall_time = started.elapsed().as_secs_f64();
        return Ok(record);
    }

    let d = x0.len();
    let mut stepper = match spec.method {
        Method::FanosRms => {
            let cfg = settings.fanos.clone().with_lr(spec.lr);
            cfg.validate()?;
            let state = FanosState::new(x0.clone(), &cfg);
            Stepper::Fanos(cfg, Box::new(state))
        }
        Method::SgdMomentum => Stepper::Baseline(BaselineState::sgd_momentum(d)),
        Method::RmsProp | Method::RmsPropClip => Stepper::Baseline(BaselineState::rmsprop(d)),
        Method::AdamW | Method::AdamWClip => Stepper::Baseline(BaselineState::adamw(d)),
        Method::Lbfgs => unreachable!(),
    };
    let clip = matches!(spec.method, Method::AdamWClip | Method::RmsPropClip);
    let adamw = AdamWConfig {
        lr: spec.lr,
        ..settings.adamw
    };

    let mut theta = x0;
    let mut grad = vec![0.0; d];
    let mut thermostat = settings.record_thermostat.then(Vec::new);
    let mut last = f64::NAN;
    let mut diverged = false;

    for k in 0..spec.budget {
        if let Stepper::Fanos(_, state) = &stepper {
            theta.copy_from_slice(&state.theta);
        }
        let f = objective.eval_into(&theta, &mut grad)?;
        if k == 0 && !f.is_finite() {
            return Err(HarnessError::NonFiniteInitialLoss(f));
        }
        last = f;
        let is_last = k + 1 == spec.budget;
        if is_divergent_loss(f, settings.divergence_threshold) {
            record.loss_trace.push((k as u64, f));
            diverged = true;
            break;
        }
        if is_trace_point(k, spec.budget, MAX_TRACE_POINTS) || is_last {
            record.loss_trace.push((k as u64, f));
        }
        if is_last {
            // the final evaluation is the reported loss; no step follows it
            break;
        }

        let g: std::borrow::Cow<[f64]> = if clip {
            clip_gradient(&grad, settings.baseline_clip).into()
        } else {
            (&grad[..]).into()
        };
        let stepped: std::result::Result<Option<ThermostatSample>, OptimError> = match &mut stepper
        {
            Stepper::Fanos(cfg, state) => fanos_step(state, &g, cfg).map(Some),
            Stepper::Baseline(BaselineState::SgdMomentum { buf }) => {
                sgd_momentum_step(&mut theta, buf, &g, spec.lr, settings.sgd_momentum).map(|_| None)
            }
            Stepper::Baseline(BaselineState::RmsProp { square_avg }) => rmsprop_step(
                &mut theta,
                square_avg,
                &g,
                spec.lr,
                settings.rmsprop_alpha,
                settings.rmsprop_eps,
            )
            .map(|_| None),
            Stepper::Baseline(BaselineState::AdamW(state)) => {
                adamw_step(&mut theta, state, &g, &adamw).map(|_| None)
            }
        };
        match stepped {
            Ok(sample) => {
                if let (Some(trace), Some(s)) = (thermostat.as_mut(), sample) {
                    trace.push(s);
                }
            }
            Err(OptimError::NonFiniteGradient { .. }) => {
                diverged = true;
                break;
            }
            Err(e) => return Err(e.into()),
        }
    }

    record.final_loss = (!diverged).then_some(last);
    record.eval_count = objective.eval_count();
    record.thermostat_trace = thermostat;
    record.wall_time = started.elapsed().as_secs_f64();
    Ok(record)
}
