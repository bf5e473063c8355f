use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fanos_harness::error::Result;
use fanos_harness::method::Method;
use fanos_harness::output::sci;
use fanos_harness::plan::{LearningRates, OutputFormat, SweepPlan};
use fanos_harness::runners::{
    default_stability_grid, run_ablations, run_quadratic_sweep, run_rosenbrock_sweep,
    run_stability_report, run_thermostat_diagnostics, AblationPlan, SweepReport, ThermostatPlan,
};
use fanos_harness::trial::TrialSettings;

/// Benchmark harness for the FANoS optimizer and its baselines.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learning-rate sweep on the 100-dimensional Rosenbrock function.
    RosenbrockSweep {
        #[command(flatten)]
        run: RunArgs,
        /// Methods to run [default: all seven]
        #[arg(long, value_delimiter = ',')]
        methods: Vec<Method>,
        /// Learning-rate grid [default: 1e-4,1e-3,3e-3,1e-2,3e-2,1e-1]
        #[arg(long, value_delimiter = ',')]
        lrs: Vec<f64>,
        /// Number of seeds (0..n)
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[command(flatten)]
        hyper: HyperArgs,
    },
    /// Condition-number sweep on rotated quadratics with fixed learning rates.
    QuadraticSweep {
        #[command(flatten)]
        run: RunArgs,
        /// Methods to run [default: SGD+Mom,RMSProp,AdamW,LBFGS,FANoS-RMS]
        #[arg(long, value_delimiter = ',')]
        methods: Vec<Method>,
        /// Condition numbers
        #[arg(long, value_delimiter = ',', default_value = "1e2,1e3,1e4,1e5,1e6")]
        kappas: Vec<f64>,
        /// Number of seeds (0..n)
        #[arg(long, default_value_t = 3)]
        seeds: u64,
        #[command(flatten)]
        hyper: HyperArgs,
    },
    /// All optimizer ablation variants on Rosenbrock-100D at one learning rate.
    Ablations {
        #[command(flatten)]
        run: RunArgs,
        /// Learning rate shared by every variant
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        /// Number of seeds (0..n)
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[command(flatten)]
        hyper: HyperArgs,
    },
    /// Per-step thermostat logs in a well-tuned and a poorly-tuned regime.
    ThermostatDiag {
        /// Output directory
        #[arg(long, default_value = "results/thermostat")]
        out: PathBuf,
        #[arg(long, default_value_t = 3e-2)]
        lr_good: f64,
        #[arg(long, default_value_t = 1e-1)]
        lr_bad: f64,
        /// Optimizer steps per regime
        #[arg(long, default_value_t = 3000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        hyper: HyperArgs,
    },
    /// Update-matrix spectra of both integrators on a harmonic oscillator.
    StabilityReport {
        /// Output directory
        #[arg(long, default_value = "results/stability")]
        out: PathBuf,
        /// h·ω values [default: 100 points evenly spaced over (0, 5]]
        #[arg(long, value_delimiter = ',')]
        h_omega: Vec<f64>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Output directory
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Gradient evaluations per trial
    #[arg(long, default_value_t = 3000)]
    budget: usize,
    /// Output format: csv or json
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
    /// Worker threads
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Also write per-trial wall times to timing.csv
    #[arg(long)]
    timing: bool,
}

/// Optimizer hyperparameter overrides.
#[derive(Args)]
struct HyperArgs {
    /// Squared-gradient EMA rate
    #[arg(long, default_value_t = 0.999)]
    beta: f64,
    /// Thermostat inertia
    #[arg(long, default_value_t = 1.0)]
    q: f64,
    /// Initial target temperature
    #[arg(long, default_value_t = 1e-3)]
    t_max: f64,
    /// Final target temperature
    #[arg(long, default_value_t = 0.0)]
    t_min: f64,
    /// Target schedule time constant (steps)
    #[arg(long, default_value_t = 20000.0)]
    tau: f64,
    /// Temperature EMA rate
    #[arg(long, default_value_t = 0.9)]
    rho_t: f64,
    /// Friction clip bound
    #[arg(long, default_value_t = 10.0)]
    zeta_max: f64,
    /// Global gradient-norm clip threshold for FANoS and the +clip baselines
    /// (0 disables FANoS clipping)
    #[arg(long, default_value_t = 1.0)]
    clip: f64,
}

impl HyperArgs {
    fn settings(&self) -> TrialSettings {
        let mut s = TrialSettings::default();
        let f = &mut s.fanos;
        f.beta = self.beta;
        f.q = self.q;
        f.t_max = self.t_max;
        f.t_min = self.t_min;
        f.tau = self.tau;
        f.rho_t = self.rho_t;
        f.zeta_max = self.zeta_max;
        f.grad_clip = (self.clip > 0.0).then_some(self.clip);
        if self.clip > 0.0 {
            s.baseline_clip = self.clip;
        }
        s
    }
}

fn sweep_plan(
    mut plan: SweepPlan,
    run: RunArgs,
    methods: Vec<Method>,
    seeds: u64,
    hyper: &HyperArgs,
) -> SweepPlan {
    plan.out = run.out;
    plan.budget = run.budget;
    plan.format = run.format;
    plan.jobs = run.jobs;
    plan.timing = run.timing;
    plan.seeds = (0..seeds).collect();
    if !methods.is_empty() {
        plan.methods = methods;
    }
    plan.settings = hyper.settings();
    plan
}

fn print_report(report: &SweepReport) {
    let ok = |v: Option<f64>| v.map(sci).unwrap_or_else(|| "--".into());
    for s in &report.summaries {
        let x = s.kappa.map_or_else(
            || format!("lr={}", sci(s.lr)),
            |k| format!("kappa={}", sci(k)),
        );
        println!(
            "{:<20} {:<22} mean={:<16} div_rate={:.2}",
            s.method,
            x,
            ok(s.mean),
            s.divergence_rate
        );
    }
    for b in &report.best {
        match &b.best {
            Some(s) => println!("best {:<14} lr={} mean={}", b.method, sci(s.lr), ok(s.mean)),
            None => println!("best {:<14} --", b.method),
        }
    }
    for f in &report.files {
        println!("wrote {}", f.display());
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::RosenbrockSweep {
            run,
            methods,
            lrs,
            seeds,
            hyper,
        } => {
            let mut plan = sweep_plan(SweepPlan::rosenbrock(""), run, methods, seeds, &hyper);
            if !lrs.is_empty() {
                plan.lrs = LearningRates::Grid(lrs);
            }
            print_report(&run_rosenbrock_sweep(&plan)?);
        }
        Command::QuadraticSweep {
            run,
            methods,
            kappas,
            seeds,
            hyper,
        } => {
            let mut plan = sweep_plan(SweepPlan::quadratic(""), run, methods, seeds, &hyper);
            plan.kappas = kappas;
            print_report(&run_quadratic_sweep(&plan)?);
        }
        Command::Ablations {
            run,
            lr,
            seeds,
            hyper,
        } => {
            let plan = AblationPlan {
                lr,
                seeds: (0..seeds).collect(),
                budget: run.budget,
                out: run.out,
                format: run.format,
                jobs: run.jobs,
                timing: run.timing,
                settings: hyper.settings(),
            };
            print_report(&run_ablations(&plan)?);
        }
        Command::ThermostatDiag {
            out,
            lr_good,
            lr_bad,
            steps,
            seed,
            hyper,
        } => {
            let plan = ThermostatPlan {
                lr_good,
                lr_bad,
                steps,
                seed,
                out,
                settings: hyper.settings(),
            };
            let report = run_thermostat_diagnostics(&plan)?;
            println!("good regime: {} steps logged", report.good.len());
            println!("bad regime: {} steps logged", report.bad.len());
            for f in &report.files {
                println!("wrote {}", f.display());
            }
        }
        Command::StabilityReport { out, h_omega } => {
            let grid = if h_omega.is_empty() {
                default_stability_grid(100, 5.0)
            } else {
                h_omega
            };
            let (rows, path) = run_stability_report(&grid, &out)?;
            println!("{} rows", rows.len());
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
