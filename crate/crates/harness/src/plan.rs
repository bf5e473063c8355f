//! Run plans and the ablation variant set.

use std::path::PathBuf;
use std::str::FromStr;

use fanos_core::optim::{FanosConfig, FrictionMode, Integrator, MassMode, ScheduleMode};

use crate::error::HarnessError;
use crate::method::Method;
use crate::trial::TrialSettings;

pub const DEFAULT_BUDGET: usize = 3000;
pub const DEFAULT_LRS: [f64; 6] = [1e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1];
pub const DEFAULT_KAPPAS: [f64; 5] = [1e2, 1e3, 1e4, 1e5, 1e6];
pub const ROSENBROCK_SEEDS: u64 = 10;
pub const QUADRATIC_SEEDS: u64 = 3;
/// The ablation learning rate is not pinned by the reference protocol.
pub const DEFAULT_ABLATION_LR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(HarnessError::InvalidPlan(format!(
                "unknown format '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchmarkKind {
    Rosenbrock100,
    Quadratic,
}

/// Learning rates of a sweep: a shared grid, or one fixed rate per method.
#[derive(Debug, Clone, PartialEq)]
pub enum LearningRates {
    Grid(Vec<f64>),
    PerMethod(Vec<(Method, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub benchmark: BenchmarkKind,
    pub methods: Vec<Method>,
    pub lrs: LearningRates,
    pub seeds: Vec<u64>,
    pub budget: usize,
    /// Condition numbers; quadratic sweeps only.
    pub kappas: Vec<f64>,
    pub out: PathBuf,
    pub format: OutputFormat,
    pub jobs: usize,
    /// Also write per-trial wall times (`timing.csv`).
    pub timing: bool,
    pub settings: TrialSettings,
}

impl SweepPlan {
    /// Seven methods × six learning rates × ten seeds, 3000 evaluations.
    pub fn rosenbrock(out: impl Into<PathBuf>) -> Self {
        Self {
            benchmark: BenchmarkKind::Rosenbrock100,
            methods: Method::ROSENBROCK.to_vec(),
            lrs: LearningRates::Grid(DEFAULT_LRS.to_vec()),
            seeds: (0..ROSENBROCK_SEEDS).collect(),
            budget: DEFAULT_BUDGET,
            kappas: Vec::new(),
            out: out.into(),
            format: OutputFormat::Csv,
            jobs: 1,
            timing: false,
            settings: TrialSettings::default(),
        }
    }

    /// Five methods at their fixed rates × five condition numbers × three seeds.
    pub fn quadratic(out: impl Into<PathBuf>) -> Self {
        Self {
            benchmark: BenchmarkKind::Quadratic,
            methods: Method::QUADRATIC.to_vec(),
            lrs: LearningRates::PerMethod(
                Method::QUADRATIC
                    .iter()
                    .map(|m| (*m, m.quadratic_lr()))
                    .collect(),
            ),
            seeds: (0..QUADRATIC_SEEDS).collect(),
            budget: DEFAULT_BUDGET,
            kappas: DEFAULT_KAPPAS.to_vec(),
            out: out.into(),
            format: OutputFormat::Csv,
            jobs: 1,
            timing: false,
            settings: TrialSettings::default(),
        }
    }

    pub fn lrs_for(&self, method: Method) -> Vec<f64> {
        match &self.lrs {
            LearningRates::Grid(lrs) => lrs.clone(),
            LearningRates::PerMethod(table) => table
                .iter()
                .filter(|(m, _)| *m == method)
                .map(|(_, lr)| *lr)
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::InvalidPlan(m));
        if self.methods.is_empty() {
            return bad("no methods selected".into());
        }
        if self.seeds.is_empty() {
            return bad("no seeds selected".into());
        }
        if self.budget == 0 {
            return bad("budget must be at least 1".into());
        }
        if self.jobs == 0 {
            return bad("jobs must be at least 1".into());
        }
        for m in &self.methods {
            let lrs = self.lrs_for(*m);
            if lrs.is_empty() {
                return bad(format!("no learning rate for {m}"));
            }
            if let Some(lr) = lrs.iter().find(|lr| !(**lr > 0.0 && lr.is_finite())) {
                return bad(format!("learning rate {lr} is not positive"));
            }
        }
        if self.benchmark == BenchmarkKind::Quadratic {
            if self.kappas.is_empty() {
                return bad("quadratic sweep needs at least one kappa".into());
            }
            if let Some(k) = self.kappas.iter().find(|k| !(**k >= 1.0 && k.is_finite())) {
                return bad(format!("kappa {k} must be >= 1"));
            }
        }
        self.settings.fanos.validate()?;
        self.settings.lbfgs.validate()?;
        Ok(())
    }
}

/// A named change to the default optimizer configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationVariant {
    pub name: &'static str,
    pub config: FanosConfig,
}

/// The eight ablation variants, derived from `base`, in table order.
pub fn ablation_variants(base: &FanosConfig) -> Vec<AblationVariant> {
    let with = |name, f: &dyn Fn(&mut FanosConfig)| {
        let mut config = base.clone();
        f(&mut config);
        AblationVariant { name, config }
    };
    vec![
        with("A2-FixedFriction-0", &|c| {
            c.friction_mode = FrictionMode::Fixed(0.0)
        }),
        with("A2-FixedFriction-1", &|c| {
            c.friction_mode = FrictionMode::Fixed(1.0)
        }),
        with("A2-FixedFriction-5", &|c| {
            c.friction_mode = FrictionMode::Fixed(5.0)
        }),
        with("FANoS-Baseline", &|_| {}),
        with("explicit_euler", &|c| {
            c.integrator = Integrator::ExplicitEuler
        }),
        with("identity_mass", &|c| c.mass_mode = MassMode::Identity),
        with("no_T_schedule", &|c| {
            c.schedule_mode = ScheduleMode::Constant
        }),
        with("no_grad_clip", &|c| c.grad_clip = None),
    ]
}
