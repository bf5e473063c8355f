//! Trial records and their aggregation into sweep summaries.

use std::cmp::Ordering;

use rand::Rng;
use thiserror::Error;

use crate::optim::ThermostatSample;
use crate::rng;

/// Losses above this count as divergence unless configured otherwise.
pub const DEFAULT_DIVERGENCE_THRESHOLD: f64 = 1e10;
pub const DEFAULT_RESAMPLES: usize = 10_000;
pub const DEFAULT_BOOTSTRAP_SEED: u64 = 0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("cannot aggregate an empty set of values")]
    Empty,
    #[error("confidence level must lie in (0, 1), got {0}")]
    InvalidLevel(f64),
    #[error("bootstrap needs at least one resample")]
    NoResamples,
    #[error("records mix different groups: {0}")]
    MixedGroup(String),
}

/// True when `loss` marks a trajectory as diverged.
pub fn is_divergent_loss(loss: f64, threshold: f64) -> bool {
    !loss.is_finite() || loss > threshold
}

/// One `(method, lr, seed)` run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub benchmark: String,
    pub method: String,
    pub lr: f64,
    pub seed: u64,
    /// Condition number for quadratic trials.
    pub kappa: Option<f64>,
    /// `None` exactly when the trial diverged.
    pub final_loss: Option<f64>,
    /// Sampled `(evaluation index, loss)` pairs.
    pub loss_trace: Vec<(u64, f64)>,
    pub eval_count: usize,
    pub thermostat_trace: Option<Vec<ThermostatSample>>,
    /// Seconds. Informational only.
    pub wall_time: f64,
}

impl TrialRecord {
    pub fn diverged(&self) -> bool {
        self.final_loss.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub benchmark: String,
    pub method: String,
    pub lr: f64,
    pub kappa: Option<f64>,
    pub n_seeds: usize,
    /// Mean and sample standard deviation of the non-divergent final
    /// losses; absent when every seed diverged.
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub ci: Option<(f64, f64)>,
    pub divergence_rate: f64,
}

fn sum(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |acc, x| acc + x)
}

pub fn mean(values: &[f64]) -> Result<f64, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    Ok(sum(values) / values.len() as f64)
}

/// Sample standard deviation (n - 1 denominator); zero for a single value.
pub fn sample_std(values: &[f64]) -> Result<f64, StatsError> {
    let m = mean(values)?;
    if values.len() < 2 {
        return Ok(0.0);
    }
    let ss = values.iter().fold(0.0, |acc, x| acc + (x - m) * (x - m));
    Ok((ss / (values.len() - 1) as f64).sqrt())
}

/// Linear-interpolated quantile of an ascending slice.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Percentile bootstrap interval for the mean.
///
/// Draws `resamples` resamples with replacement from a stream keyed on
/// `seed` and returns the `(1 - level)/2` and `(1 + level)/2` quantiles of
/// the resample means.
pub fn bootstrap_ci(
    values: &[f64],
    level: f64,
    resamples: usize,
    seed: u64,
) -> Result<(f64, f64), StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(StatsError::InvalidLevel(level));
    }
    if resamples == 0 {
        return Err(StatsError::NoResamples);
    }
    let n = values.len();
    let mut rng = rng::stream(&format!("bootstrap/seed={seed}"));
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| {
            let total = (0..n).fold(0.0, |acc, _| acc + values[rng.random_range(0..n)]);
            total / n as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let (lo_q, hi_q) = ((1.0 - level) / 2.0, (1.0 + level) / 2.0);
    Ok((quantile_sorted(&means, lo_q), quantile_sorted(&means, hi_q)))
}

/// Aggregates records that share benchmark, method and learning rate.
pub fn summarize(records: &[TrialRecord]) -> Result<SweepSummary, StatsError> {
    summarize_with(records, 0.95, DEFAULT_RESAMPLES, DEFAULT_BOOTSTRAP_SEED)
}

pub fn summarize_with(
    records: &[TrialRecord],
    level: f64,
    resamples: usize,
    bootstrap_seed: u64,
) -> Result<SweepSummary, StatsError> {
    let first = records.first().ok_or(StatsError::Empty)?;
    if let Some(other) = records.iter().find(|r| {
        r.method != first.method
            || r.benchmark != first.benchmark
            || r.lr.to_bits() != first.lr.to_bits()
            || r.kappa.map(f64::to_bits) != first.kappa.map(f64::to_bits)
    }) {
        return Err(StatsError::MixedGroup(format!(
            "{}/{}@{} vs {}/{}@{}",
            first.benchmark, first.method, first.lr, other.benchmark, other.method, other.lr
        )));
    }

    // Order-independent reduction.
    let mut finals: Vec<(u64, f64)> = records
        .iter()
        .filter_map(|r| r.final_loss.map(|f| (r.seed, f)))
        .collect();
    finals.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let finals: Vec<f64> = finals.into_iter().map(|(_, f)| f).collect();

    let n = records.len();
    let divergence_rate = (n - finals.len()) as f64 / n as f64;
    let (mean, std, ci) = if finals.is_empty() {
        (None, None, None)
    } else {
        (
            Some(mean(&finals)?),
            Some(sample_std(&finals)?),
            Some(bootstrap_ci(&finals, level, resamples, bootstrap_seed)?),
        )
    };
    Ok(SweepSummary {
        benchmark: first.benchmark.clone(),
        method: first.method.clone(),
        lr: first.lr,
        kappa: first.kappa,
        n_seeds: n,
        mean,
        std,
        ci,
        divergence_rate,
    })
}

/// Best learning rate for one method.
#[derive(Debug, Clone, PartialEq)]
pub struct BestLr {
    pub method: String,
    /// `None` when every learning rate diverged on every seed.
    pub best: Option<SweepSummary>,
}

/// Picks, per method, the learning rate with the lowest mean final loss.
/// Fully divergent learning rates are skipped; ties go to the smaller
/// learning rate. Methods keep their order of first appearance.
pub fn best_lr(summaries: &[SweepSummary]) -> Vec<BestLr> {
    let mut methods: Vec<&str> = Vec::new();
    for s in summaries {
        if !methods.contains(&s.method.as_str()) {
            methods.push(&s.method);
        }
    }
    methods
        .into_iter()
        .map(|method| {
            let best = summaries
                .iter()
                .filter(|s| s.method == method && s.mean.is_some())
                .min_by(|a, b| {
                    a.mean
                        .unwrap()
                        .total_cmp(&b.mean.unwrap())
                        .then(a.lr.partial_cmp(&b.lr).unwrap_or(Ordering::Equal))
                })
                .cloned();
            BestLr {
                method: method.to_string(),
                best,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn record(method: &str, lr: f64, seed: u64, final_loss: Option<f64>) -> TrialRecord {
        TrialRecord {
            benchmark: "test".into(),
            method: method.into(),
            lr,
            seed,
            kappa: None,
            final_loss,
            loss_trace: Vec::new(),
            eval_count: 1,
            thermostat_trace: None,
            wall_time: 0.0,
        }
    }

    fn summary(method: &str, lr: f64, mean: Option<f64>) -> SweepSummary {
        SweepSummary {
            benchmark: "test".into(),
            method: method.into(),
            lr,
            kappa: None,
            n_seeds: 3,
            mean,
            std: mean.map(|_| 0.0),
            ci: mean.map(|m| (m, m)),
            divergence_rate: if mean.is_some() { 0.0 } else { 1.0 },
        }
    }

    #[test]
    fn divergence_classification() {
        assert!(is_divergent_loss(f64::NAN, 1e10));
        assert!(is_divergent_loss(f64::INFINITY, 1e10));
        assert!(is_divergent_loss(2e10, 1e10));
        assert!(!is_divergent_loss(1e10, 1e10));
        assert!(!is_divergent_loss(-3.0, 1e10));
    }

    #[test]
    fn degenerate_bootstrap() {
        assert_eq!(bootstrap_ci(&[5.0; 4], 0.95, 1000, 0).unwrap(), (5.0, 5.0));
        assert_eq!(bootstrap_ci(&[2.5], 0.95, 1000, 3).unwrap(), (2.5, 2.5));
    }

    #[test]
    fn two_point_bootstrap_matches_enumeration() {
        // Exhaustive: resample means {0, .5, .5, 1}, each resample equally
        // likely. P(mean = 0) = P(mean = 1) = 1/4 > 2.5%, so the exact
        // percentile interval is (0, 1).
        let resample_means = {
            let v = [0.0, 1.0];
            let mut out = Vec::new();
            for a in v {
                for b in v {
                    out.push((a + b) / 2.0);
                }
            }
            out
        };
        let p_low = resample_means.iter().filter(|&&m| m == 0.0).count() as f64 / 4.0;
        assert!(p_low > 0.025);
        let exact = (0.0, 1.0);
        let (lo, hi) = bootstrap_ci(&[0.0, 1.0], 0.95, DEFAULT_RESAMPLES, 0).unwrap();
        assert!((lo - exact.0).abs() <= 0.05);
        assert!((hi - exact.1).abs() <= 0.05);
    }

    #[test]
    fn bootstrap_errors() {
        assert_eq!(bootstrap_ci(&[], 0.95, 10, 0), Err(StatsError::Empty));
        assert_eq!(
            bootstrap_ci(&[1.0], 1.0, 10, 0),
            Err(StatsError::InvalidLevel(1.0))
        );
        assert_eq!(
            bootstrap_ci(&[1.0], 0.95, 0, 0),
            Err(StatsError::NoResamples)
        );
    }

    #[test]
    fn constant_finals() {
        let recs: Vec<_> = (0..10).map(|s| record("m", 0.1, s, Some(2.0))).collect();
        let s = summarize(&recs).unwrap();
        assert_eq!(s.mean, Some(2.0));
        assert_eq!(s.std, Some(0.0));
        assert_eq!(s.ci, Some((2.0, 2.0)));
        assert_eq!(s.divergence_rate, 0.0);
        assert_eq!(s.n_seeds, 10);
    }

    #[test]
    fn all_divergent_has_no_statistics() {
        let recs: Vec<_> = (0..3).map(|s| record("m", 0.1, s, None)).collect();
        let s = summarize(&recs).unwrap();
        assert_eq!(s.divergence_rate, 1.0);
        assert_eq!((s.mean, s.std, s.ci), (None, None, None));
    }

    #[test]
    fn mean_and_sample_std() {
        let recs: Vec<_> = [1.0, 2.0, 3.0]
            .iter()
            .enumerate()
            .map(|(s, &f)| record("m", 0.1, s as u64, Some(f)))
            .collect();
        let s = summarize(&recs).unwrap();
        assert_eq!(s.mean, Some(2.0));
        assert_eq!(s.std, Some(1.0));
    }

    #[test]
    fn partial_divergence_rate() {
        let recs = vec![
            record("m", 0.1, 0, Some(1.0)),
            record("m", 0.1, 1, None),
            record("m", 0.1, 2, Some(3.0)),
            record("m", 0.1, 3, None),
        ];
        let s = summarize(&recs).unwrap();
        assert_eq!(s.divergence_rate, 0.5);
        assert_eq!(s.mean, Some(2.0));
    }

    #[test]
    fn summarize_rejects_mixed_and_empty() {
        assert_eq!(summarize(&[]), Err(StatsError::Empty));
        let recs = vec![
            record("a", 0.1, 0, Some(1.0)),
            record("b", 0.1, 1, Some(1.0)),
        ];
        assert!(matches!(summarize(&recs), Err(StatsError::MixedGroup(_))));
        let recs = vec![
            record("a", 0.1, 0, Some(1.0)),
            record("a", 0.2, 1, Some(1.0)),
        ];
        assert!(matches!(summarize(&recs), Err(StatsError::MixedGroup(_))));
    }

    #[test]
    fn best_lr_lowest_mean() {
        let out = best_lr(&[summary("m", 0.1, Some(5.0)), summary("m", 0.01, Some(3.0))]);
        assert_eq!(out[0].best.as_ref().unwrap().lr, 0.01);
    }

    #[test]
    fn best_lr_skips_divergent() {
        let out = best_lr(&[summary("m", 0.1, None), summary("m", 0.01, Some(7.0))]);
        assert_eq!(out[0].best.as_ref().unwrap().lr, 0.01);
    }

    #[test]
    fn best_lr_tie_goes_to_smaller_lr() {
        let out = best_lr(&[summary("m", 1e-2, Some(3.0)), summary("m", 1e-3, Some(3.0))]);
        assert_eq!(out[0].best.as_ref().unwrap().lr, 1e-3);
    }

    #[test]
    fn best_lr_all_divergent_and_ordering() {
        let out = best_lr(&[
            summary("b", 0.1, None),
            summary("a", 0.1, Some(1.0)),
            summary("b", 0.2, None),
        ]);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].method, "b");
        assert!(out[0].best.is_none());
        assert_eq!(out[1].method, "a");
    }
}
