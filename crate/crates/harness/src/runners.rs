//! Protocol runners: sweeps, ablations, thermostat diagnostics and the
//! stability report.
//!
//! Trials run on a fixed-size worker pool. Results are collected in plan
//! order, so output files do not depend on the degree of parallelism.

use std::path::{Path, PathBuf};

use fanos_core::objectives::{stability_spectrum, StabilityCase, StabilitySpectrum};
use fanos_core::optim::{Integrator, ThermostatSample};
use fanos_core::stats::{best_lr, summarize, BestLr, SweepSummary, TrialRecord};
use rayon::prelude::*;

use crate::error::{HarnessError, Result};
use crate::method::Method;
use crate::output::{self, SummaryKey};
use crate::plan::{ablation_variants, BenchmarkKind, OutputFormat, SweepPlan, DEFAULT_BUDGET};
use crate::trial::{run_trial, Benchmark, TrialSettings, TrialSpec};

/// One unit of work: a trial and the settings it runs under.
#[derive(Debug, Clone)]
pub struct Job {
    pub spec: TrialSpec,
    pub settings: TrialSettings,
}

/// Runs `jobs` on `threads` workers; results keep the input order.
pub fn execute(jobs: &[Job], threads: usize) -> Result<Vec<TrialRecord>> {
    if threads == 0 {
        return Err(HarnessError::InvalidPlan("jobs must be at least 1".into()));
    }
    let run = |job: &Job| run_trial(&job.spec, &job.settings);
    if threads == 1 {
        return jobs.iter().map(run).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    pool.install(|| jobs.par_iter().map(run).collect())
}

/// Summaries of consecutive runs of `group` records each.
fn summarize_groups(records: &[TrialRecord], group: usize) -> Result<Vec<SweepSummary>> {
    records
        .chunks(group)
        .map(|c| summarize(c).map_err(HarnessError::from))
        .collect()
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub trials: Vec<TrialRecord>,
    pub summaries: Vec<SweepSummary>,
    /// Best learning rate per method (learning-rate sweeps only).
    pub best: Vec<BestLr>,
    pub files: Vec<PathBuf>,
}

/// Trials of a sweep plan, ordered method → κ → lr → seed.
pub fn sweep_jobs(plan: &SweepPlan) -> Vec<Job> {
    let benchmarks: Vec<Benchmark> = match plan.benchmark {
        BenchmarkKind::Rosenbrock100 => vec![Benchmark::ROSENBROCK_100],
        BenchmarkKind::Quadratic => plan
            .kappas
            .iter()
            .map(|&k| Benchmark::quadratic(k))
            .collect(),
    };
    let mut jobs = Vec::new();
    for &method in &plan.methods {
        for &benchmark in &benchmarks {
            for lr in plan.lrs_for(method) {
                for &seed in &plan.seeds {
                    jobs.push(Job {
                        spec: TrialSpec::new(method, benchmark, lr, seed, plan.budget),
                        settings: plan.settings.clone(),
                    });
                }
            }
        }
    }
    jobs
}

fn ensure_kind(plan: &SweepPlan, kind: BenchmarkKind) -> Result<()> {
    if plan.benchmark != kind {
        return Err(HarnessError::InvalidPlan(format!(
            "expected a {kind:?} plan, got {:?}",
            plan.benchmark
        )));
    }
    plan.validate()
}

fn write_common(
    plan_out: &Path,
    format: OutputFormat,
    trials: &[TrialRecord],
    timing: bool,
) -> Result<Vec<PathBuf>> {
    output::ensure_dir(plan_out)?;
    let mut files = vec![output::write_trials(plan_out, "trials", trials, format)?];
    if timing {
        files.push(output::write_timing(plan_out, trials)?);
    }
    Ok(files)
}

/// Learning-rate sweep on Rosenbrock-100D. Writes `trials`, `summary`
/// (one row per method and learning rate), `best` (one row per method)
/// and `sweep.dat`.
pub fn run_rosenbrock_sweep(plan: &SweepPlan) -> Result<SweepReport> {
    ensure_kind(plan, BenchmarkKind::Rosenbrock100)?;
    let trials = execute(&sweep_jobs(plan), plan.jobs)?;
    let summaries = summarize_groups(&trials, plan.seeds.len())?;
    let best = best_lr(&summaries);

    let mut files = write_common(&plan.out, plan.format, &trials, plan.timing)?;
    files.push(output::write_summaries(
        &plan.out,
        "summary",
        &summaries,
        SummaryKey::Lr,
        plan.format,
    )?);
    files.push(output::write_best(&plan.out, &best, plan.format)?);
    let dat = plan.out.join("sweep.dat");
    output::write_gnuplot(&dat, &summaries, |s| s.lr)?;
    files.push(dat);
    Ok(SweepReport {
        trials,
        summaries,
        best,
        files,
    })
}

/// Condition-number sweep at fixed per-method learning rates. Writes
/// `trials`, `summary` (one row per method and κ) and `sweep.dat`.
pub fn run_quadratic_sweep(plan: &SweepPlan) -> Result<SweepReport> {
    ensure_kind(plan, BenchmarkKind::Quadratic)?;
    let trials = execute(&sweep_jobs(plan), plan.jobs)?;
    let summaries = summarize_groups(&trials, plan.seeds.len())?;

    let mut files = write_common(&plan.out, plan.format, &trials, plan.timing)?;
    files.push(output::write_summaries(
        &plan.out,
        "summary",
        &summaries,
        SummaryKey::Kappa,
        plan.format,
    )?);
    let dat = plan.out.join("sweep.dat");
    output::write_gnuplot(&dat, &summaries, |s| s.kappa.unwrap_or(f64::NAN))?;
    files.push(dat);
    Ok(SweepReport {
        trials,
        summaries,
        best: Vec::new(),
        files,
    })
}

/// Ablation run: every variant of the optimizer on Rosenbrock-100D at one
/// learning rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationPlan {
    pub lr: f64,
    pub seeds: Vec<u64>,
    pub budget: usize,
    pub out: PathBuf,
    pub format: OutputFormat,
    pub jobs: usize,
    pub timing: bool,
    /// The base optimizer configuration is `settings.fanos`.
    pub settings: TrialSettings,
}

impl AblationPlan {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        Self {
            lr: crate::plan::DEFAULT_ABLATION_LR,
            seeds: (0..crate::plan::ROSENBROCK_SEEDS).collect(),
            budget: DEFAULT_BUDGET,
            out: out.into(),
            format: OutputFormat::Csv,
            jobs: 1,
            timing: false,
            settings: TrialSettings::default(),
        }
    }
}

pub fn ablation_jobs(plan: &AblationPlan) -> Vec<Job> {
    let mut jobs = Vec::new();
    for variant in ablation_variants(&plan.settings.fanos) {
        for &seed in &plan.seeds {
            let mut spec = TrialSpec::new(
                Method::FanosRms,
                Benchmark::ROSENBROCK_100,
                plan.lr,
                seed,
                plan.budget,
            );
            spec.label = variant.name.to_string();
            let settings = TrialSettings {
                fanos: variant.config.clone(),
                ..plan.settings.clone()
            };
            jobs.push(Job { spec, settings });
        }
    }
    jobs
}

/// Writes `trials` and `summary` (one row per variant).
pub fn run_ablations(plan: &AblationPlan) -> Result<SweepReport> {
    if plan.seeds.is_empty() {
        return Err(HarnessError::InvalidPlan("no seeds selected".into()));
    }
    let jobs = ablation_jobs(plan);
    for job in &jobs {
        job.settings.fanos.clone().with_lr(plan.lr).validate()?;
    }
    let trials = execute(&jobs, plan.jobs)?;
    let summaries = summarize_groups(&trials, plan.seeds.len())?;
    let mut files = write_common(&plan.out, plan.format, &trials, plan.timing)?;
    files.push(output::write_summaries(
        &plan.out,
        "summary",
        &summaries,
        SummaryKey::Variant,
        plan.format,
    )?);
    Ok(SweepReport {
        trials,
        summaries,
        best: Vec::new(),
        files,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermostatPlan {
    pub lr_good: f64,
    pub lr_bad: f64,
    pub steps: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub settings: TrialSettings,
}

pub const DEFAULT_LR_GOOD: f64 = 3e-2;
pub const DEFAULT_LR_BAD: f64 = 1e-1;

impl ThermostatPlan {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        Self {
            lr_good: DEFAULT_LR_GOOD,
            lr_bad: DEFAULT_LR_BAD,
            steps: DEFAULT_BUDGET,
            seed: 0,
            out: out.into(),
            settings: TrialSettings::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ThermostatReport {
    pub good: Vec<ThermostatSample>,
    pub bad: Vec<ThermostatSample>,
    pub files: Vec<PathBuf>,
}

/// Logs the thermostat state after every optimizer step in a well-tuned
/// and a poorly-tuned regime. Writes `thermostat_good.csv` and
/// `thermostat_bad.csv`. A regime that diverges ends its log early.
pub fn run_thermostat_diagnostics(plan: &ThermostatPlan) -> Result<ThermostatReport> {
    if plan.steps == 0 {
        return Err(HarnessError::InvalidPlan("steps must be at least 1".into()));
    }
    let settings = TrialSettings {
        record_thermostat: true,
        ..plan.settings.clone()
    };
    settings.fanos.validate()?;
    // one extra evaluation so that `steps` updates are taken
    let trace = |lr| -> Result<Vec<ThermostatSample>> {
        let spec = TrialSpec::new(
            Method::FanosRms,
            Benchmark::ROSENBROCK_100,
            lr,
            plan.seed,
            plan.steps + 1,
        );
        Ok(run_trial(&spec, &settings)?
            .thermostat_trace
            .unwrap_or_default())
    };
    let good = trace(plan.lr_good)?;
    let bad = trace(plan.lr_bad)?;
    output::ensure_dir(&plan.out)?;
    let files = vec![
        plan.out.join("thermostat_good.csv"),
        plan.out.join("thermostat_bad.csv"),
    ];
    output::write_thermostat(&files[0], &good)?;
    output::write_thermostat(&files[1], &bad)?;
    Ok(ThermostatReport { good, bad, files })
}

/// `(hω, integrator, spectrum)`.
pub type StabilityRow = (f64, Integrator, StabilitySpectrum);

/// `n` evenly spaced points of `(0, hi]`.
pub fn default_stability_grid(n: usize, hi: f64) -> Vec<f64> {
    (1..=n).map(|i| hi * i as f64 / n as f64).collect()
}

/// Spectra of both integrators at each `hω` (with `ω = 1`). Writes
/// `stability.csv`.
pub fn run_stability_report(grid: &[f64], out: &Path) -> Result<(Vec<StabilityRow>, PathBuf)> {
    if let Some(hw) = grid.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        return Err(HarnessError::InvalidPlan(format!(
            "h*omega {hw} is not positive"
        )));
    }
    let rows: Vec<_> = grid
        .iter()
        .flat_map(|&hw| {
            [Integrator::SemiImplicit, Integrator::ExplicitEuler].map(|integrator| {
                let case = StabilityCase {
                    h: hw,
                    omega: 1.0,
                    integrator,
                };
                (hw, integrator, stability_spectrum(&case))
            })
        })
        .collect();
    output::ensure_dir(out)?;
    let path = out.join("stability.csv");
    output::write_stability(&path, &rows)?;
    Ok((rows, path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_jobs_follow_plan_order() {
        let mut plan = SweepPlan::quadratic("unused");
        plan.kappas = vec![1e2, 1e3];
        plan.seeds = vec![0, 1];
        let jobs = sweep_jobs(&plan);
        assert_eq!(jobs.len(), 5 * 2 * 2);
        assert_eq!(jobs[0].spec.method, plan.methods[0]);
        assert_eq!(jobs[1].spec.seed, 1);
        assert_eq!(jobs[2].spec.benchmark.kappa(), Some(1e3));
    }

    #[test]
    fn ablation_jobs_label_variants() {
        let mut plan = AblationPlan::new("unused");
        plan.seeds = vec![3];
        let jobs = ablation_jobs(&plan);
        assert_eq!(jobs.len(), 8);
        assert_eq!(jobs[3].spec.label, "FANoS-Baseline");
        assert!(jobs.iter().all(|j| j.spec.method == Method::FanosRms));
    }

    #[test]
    fn stability_grid_is_open_at_zero() {
        let g = default_stability_grid(4, 2.0);
        assert_eq!(g, vec![0.5, 1.0, 1.5, 2.0]);
    }
}
