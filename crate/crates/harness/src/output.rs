//! Result files.
//!
//! CSV files use '.' decimals and scientific notation with ten significant
//! digits; fully divergent cells render as `--`. JSON files hold one object
//! per trial (with its loss trace) or per summary row, `null` standing in
//! for absent statistics. Wall times live in a separate timing file so the
//! result files are byte-reproducible.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use fanos_core::objectives::StabilitySpectrum;
use fanos_core::optim::{Integrator, ThermostatSample};
use fanos_core::stats::{BestLr, SweepSummary, TrialRecord};
use serde::Serialize;

use crate::error::{HarnessError, Result};
use crate::plan::OutputFormat;

pub const MISSING: &str = "--";

pub fn sci(x: f64) -> String {
    format!("{x:.9e}")
}

fn opt_sci(x: Option<f64>) -> String {
    x.map(sci).unwrap_or_else(|| MISSING.to_string())
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn write_csv(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let csv_err = |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_path(path)
        .map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| HarnessError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn file_name(dir: &Path, stem: &str, format: OutputFormat) -> PathBuf {
    let ext = match format {
        OutputFormat::Csv => "csv",
        OutputFormat::Json => "json",
    };
    dir.join(format!("{stem}.{ext}"))
}

#[derive(Serialize)]
struct TrialJson<'a> {
    benchmark: &'a str,
    method: &'a str,
    lr: f64,
    kappa: Option<f64>,
    seed: u64,
    final_loss: Option<f64>,
    diverged: bool,
    eval_count: usize,
    loss_trace: &'a [(u64, f64)],
}

pub fn write_trials(
    dir: &Path,
    stem: &str,
    records: &[TrialRecord],
    format: OutputFormat,
) -> Result<PathBuf> {
    let path = file_name(dir, stem, format);
    match format {
        OutputFormat::Csv => write_csv(
            &path,
            &[
                "benchmark",
                "method",
                "lr",
                "kappa",
                "seed",
                "final_loss",
                "diverged",
                "eval_count",
            ],
            records.iter().map(|r| {
                vec![
                    r.benchmark.clone(),
                    r.method.clone(),
                    sci(r.lr),
                    r.kappa.map(sci).unwrap_or_default(),
                    r.seed.to_string(),
                    opt_sci(r.final_loss),
                    r.diverged().to_string(),
                    r.eval_count.to_string(),
                ]
            }),
        )?,
        OutputFormat::Json => {
            let rows: Vec<_> = records
                .iter()
                .map(|r| TrialJson {
                    benchmark: &r.benchmark,
                    method: &r.method,
                    lr: r.lr,
                    kappa: r.kappa,
                    seed: r.seed,
                    final_loss: r.final_loss,
                    diverged: r.diverged(),
                    eval_count: r.eval_count,
                    loss_trace: &r.loss_trace,
                })
                .collect();
            write_json(&path, &rows)?
        }
    }
    Ok(path)
}

/// Wall-clock seconds per trial. Informational; not reproducible.
pub fn write_timing(dir: &Path, records: &[TrialRecord]) -> Result<PathBuf> {
    let path = dir.join("timing.csv");
    write_csv(
        &path,
        &["method", "lr", "kappa", "seed", "wall_time_s"],
        records.iter().map(|r| {
            vec![
                r.method.clone(),
                sci(r.lr),
                r.kappa.map(sci).unwrap_or_default(),
                r.seed.to_string(),
                format!("{:.6}", r.wall_time),
            ]
        }),
    )?;
    Ok(path)
}

/// First column of a summary table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SummaryKey {
    /// `method, lr, ...` (learning-rate sweeps)
    Lr,
    /// `method, kappa, ...` (quadratic sweep)
    Kappa,
    /// `variant, ...` (ablations)
    Variant,
}

#[derive(Serialize)]
struct SummaryJson<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    method: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    variant: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kappa: Option<f64>,
    n_seeds: usize,
    mean: Option<f64>,
    std: Option<f64>,
    ci_low: Option<f64>,
    ci_high: Option<f64>,
    div_rate: f64,
}

pub fn summary_header(key: SummaryKey) -> Vec<&'static str> {
    let mut h = match key {
        SummaryKey::Lr => vec!["method", "lr"],
        SummaryKey::Kappa => vec!["method", "kappa"],
        SummaryKey::Variant => vec!["variant"],
    };
    h.extend(["mean", "std", "ci_low", "ci_high", "div_rate"]);
    h
}

pub fn summary_row(s: &SweepSummary, key: SummaryKey) -> Vec<String> {
    let mut row = match key {
        SummaryKey::Lr => vec![s.method.clone(), sci(s.lr)],
        SummaryKey::Kappa => vec![s.method.clone(), opt_sci(s.kappa)],
        SummaryKey::Variant => vec![s.method.clone()],
    };
    row.extend([
        opt_sci(s.mean),
        opt_sci(s.std),
        opt_sci(s.ci.map(|c| c.0)),
        opt_sci(s.ci.map(|c| c.1)),
        format!("{:.6}", s.divergence_rate),
    ]);
    row
}

pub fn write_summaries(
    dir: &Path,
    stem: &str,
    summaries: &[SweepSummary],
    key: SummaryKey,
    format: OutputFormat,
) -> Result<PathBuf> {
    let path = file_name(dir, stem, format);
    match format {
        OutputFormat::Csv => write_csv(
            &path,
            &summary_header(key),
            summaries.iter().map(|s| summary_row(s, key)),
        )?,
        OutputFormat::Json => {
            let rows: Vec<_> = summaries
                .iter()
                .map(|s| SummaryJson {
                    method: (key != SummaryKey::Variant).then_some(s.method.as_str()),
                    variant: (key == SummaryKey::Variant).then_some(s.method.as_str()),
                    lr: (key == SummaryKey::Lr).then_some(s.lr),
                    kappa: if key == SummaryKey::Kappa {
                        s.kappa
                    } else {
                        None
                    },
                    n_seeds: s.n_seeds,
                    mean: s.mean,
                    std: s.std,
                    ci_low: s.ci.map(|c| c.0),
                    ci_high: s.ci.map(|c| c.1),
                    div_rate: s.divergence_rate,
                })
                .collect();
            write_json(&path, &rows)?
        }
    }
    Ok(path)
}

/// Best-learning-rate table. Methods without any non-divergent learning
/// rate appear with `--` statistics and a divergence rate of one.
pub fn write_best(dir: &Path, best: &[BestLr], format: OutputFormat) -> Result<PathBuf> {
    let summaries: Vec<SweepSummary> = best
        .iter()
        .map(|b| {
            b.best.clone().unwrap_or_else(|| SweepSummary {
                benchmark: String::new(),
                method: b.method.clone(),
                lr: f64::NAN,
                kappa: None,
                n_seeds: 0,
                mean: None,
                std: None,
                ci: None,
                divergence_rate: 1.0,
            })
        })
        .collect();
    let path = file_name(dir, "best", format);
    match format {
        OutputFormat::Csv => write_csv(
            &path,
            &summary_header(SummaryKey::Lr),
            summaries.iter().map(|s| {
                let mut row = summary_row(s, SummaryKey::Lr);
                if s.lr.is_nan() {
                    row[1] = MISSING.to_string();
                }
                row
            }),
        )?,
        OutputFormat::Json => {
            write_summaries(dir, "best", &summaries, SummaryKey::Lr, format)?;
        }
    }
    Ok(path)
}

/// gnuplot data: one block per method (`x mean ci_low ci_high`), blocks
/// separated by two blank lines so `index` selects a method. Fully
/// divergent points are written as `NaN`, which gnuplot skips.
pub fn write_gnuplot(
    path: &Path,
    summaries: &[SweepSummary],
    x: impl Fn(&SweepSummary) -> f64,
) -> Result<()> {
    let mut out = String::new();
    let mut current: Option<&str> = None;
    for s in summaries {
        if current != Some(s.method.as_str()) {
            if current.is_some() {
                out.push_str("\n\n");
            }
            out.push_str(&format!("# {}\n", s.method));
            current = Some(&s.method);
        }
        let f = |v: Option<f64>| v.map(sci).unwrap_or_else(|| "NaN".into());
        out.push_str(&format!(
            "{} {} {} {}\n",
            sci(x(s)),
            f(s.mean),
            f(s.ci.map(|c| c.0)),
            f(s.ci.map(|c| c.1))
        ));
    }
    fs::write(path, out).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub const THERMOSTAT_COLUMNS: [&str; 5] = ["step", "zeta", "t_inst", "t_ema", "t_target"];

pub fn write_thermostat(path: &Path, trace: &[ThermostatSample]) -> Result<()> {
    write_csv(
        path,
        &THERMOSTAT_COLUMNS,
        trace.iter().map(|s| {
            vec![
                s.step.to_string(),
                sci(s.zeta),
                sci(s.t_inst),
                sci(s.t_ema),
                sci(s.t_target),
            ]
        }),
    )
}

pub fn integrator_name(i: Integrator) -> &'static str {
    match i {
        Integrator::SemiImplicit => "semi_implicit",
        Integrator::ExplicitEuler => "explicit_euler",
    }
}

pub fn write_stability(path: &Path, rows: &[(f64, Integrator, StabilitySpectrum)]) -> Result<()> {
    write_csv(
        path,
        &["h_omega", "integrator", "det", "trace", "spectral_radius"],
        rows.iter().map(|(hw, i, s)| {
            vec![
                sci(*hw),
                integrator_name(*i).to_string(),
                sci(s.det),
                sci(s.trace),
                sci(s.spectral_radius),
            ]
        }),
    )
}
