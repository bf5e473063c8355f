//! Limited-memory BFGS under a hard evaluation budget.
//!
//! Directions come from the two-loop recursion seeded with the scaling
//! `γ = sᵀy / yᵀy` of the newest curvature pair. Step lengths come from a
//! strong-Wolfe search (bracketing, then zoom with safeguarded cubic
//! interpolation). Every objective call, line-search probes included, goes
//! through the [`CountingObjective`] and is charged against the budget.

use std::collections::VecDeque;

use thiserror::Error;

use crate::objectives::{CountingObjective, Objective, ObjectiveError};

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsConfig {
    pub history_size: usize,
    /// Trial step length along `-g` whenever the curvature memory is empty
    /// (first iteration and steepest-descent fallbacks). Quasi-Newton
    /// iterations start from the unit step.
    pub lr: f64,
    pub wolfe_c1: f64,
    pub wolfe_c2: f64,
    /// Probes allowed per line search.
    pub max_ls_evals: usize,
    /// Total objective evaluations, the initial one included.
    pub budget: usize,
    pub grad_tol: f64,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self {
            history_size: 100,
            lr: 1.0,
            wolfe_c1: 1e-4,
            wolfe_c2: 0.9,
            max_ls_evals: 25,
            budget: 3000,
            grad_tol: 1e-12,
        }
    }
}

impl LbfgsConfig {
    pub fn validate(&self) -> Result<(), LbfgsError> {
        let bad = |m: String| Err(LbfgsError::InvalidConfig(m));
        if self.history_size == 0 {
            return bad("history_size must be at least 1".into());
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if !(0.0 < self.wolfe_c1 && self.wolfe_c1 < self.wolfe_c2 && self.wolfe_c2 < 1.0) {
            return bad(format!(
                "need 0 < c1 < c2 < 1, got c1={} c2={}",
                self.wolfe_c1, self.wolfe_c2
            ));
        }
        if self.max_ls_evals == 0 {
            return bad("max_ls_evals must be at least 1".into());
        }
        if self.budget == 0 {
            return bad("budget must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LbfgsError {
    #[error("invalid L-BFGS configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

/// Why the run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    BudgetExhausted,
    /// Neither the quasi-Newton nor the steepest-descent search found a
    /// lower value; typically the iterate sits at rounding level.
    Stalled,
    /// The objective was not finite at the starting point.
    NonFiniteStart,
}

/// One accepted outer step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptedStep {
    pub step_length: f64,
    pub f_before: f64,
    pub f_after: f64,
    /// Directional derivative at the start and at the accepted point.
    pub slope_before: f64,
    pub slope_after: f64,
    /// Strong-Wolfe conditions verified when the step was accepted.
    pub wolfe: bool,
    pub steepest_descent_fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsRun {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub eval_count: usize,
    /// `(evaluations used, value)` after the start and after each outer step.
    pub trace: Vec<(u64, f64)>,
    pub steps: Vec<AcceptedStep>,
    pub termination: Termination,
}

struct CurvaturePair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// Bounded memory of curvature pairs; pairs with `yᵀs <= 0` (up to
/// rounding) are never stored.
struct CurvatureHistory {
    pairs: VecDeque<CurvaturePair>,
    capacity: usize,
}

impl CurvatureHistory {
    fn new(capacity: usize) -> Self {
        Self {
            pairs: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    fn push(&mut self, s: Vec<f64>, y: Vec<f64>) -> bool {
        let ys = dot(&y, &s);
        if !(ys > f64::EPSILON * norm(&s) * norm(&y)) {
            return false;
        }
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back(CurvaturePair {
            s,
            y,
            rho: 1.0 / ys,
        });
        true
    }

    fn clear(&mut self) {
        self.pairs.clear();
    }

    fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `-H g` from the two-loop recursion.
    fn direction(&self, g: &[f64]) -> Vec<f64> {
        let mut q = g.to_vec();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for p in self.pairs.iter().rev() {
            let a = p.rho * dot(&p.s, &q);
            axpy(-a, &p.y, &mut q);
            alphas.push(a);
        }
        if let Some(newest) = self.pairs.back() {
            let gamma = dot(&newest.s, &newest.y) / dot(&newest.y, &newest.y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for (p, a) in self.pairs.iter().zip(alphas.iter().rev()) {
            let b = p.rho * dot(&p.y, &q);
            axpy(a - b, &p.s, &mut q);
        }
        q.iter_mut().for_each(|v| *v = -*v);
        q
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[derive(Clone)]
struct Probe {
    t: f64,
    f: f64,
    g: Vec<f64>,
    slope: f64,
}

enum SearchOutcome {
    Wolfe(Probe),
    /// Search gave up but found a lower value.
    Decrease(Probe),
    NoDecrease,
}

/// Minimiser of the cubic through `(t1, f1, g1)` and `(t2, f2, g2)`,
/// clamped to `bounds`; bisection when the cubic has no usable minimiser.
fn cubic_interpolate(a: (f64, f64, f64), b: (f64, f64, f64), bounds: (f64, f64)) -> f64 {
    let (t1, f1, g1) = a;
    let (t2, f2, g2) = b;
    let (lo, hi) = bounds;
    let mid = 0.5 * (lo + hi);
    let d1 = g1 + g2 - 3.0 * (f1 - f2) / (t1 - t2);
    let d2_sq = d1 * d1 - g1 * g2;
    if !(d2_sq >= 0.0) {
        return mid;
    }
    let d2 = d2_sq.sqrt();
    let t = if t1 <= t2 {
        t2 - (t2 - t1) * ((g2 + d2 - d1) / (g2 - g1 + 2.0 * d2))
    } else {
        t1 - (t1 - t2) * ((g1 + d2 - d1) / (g1 - g2 + 2.0 * d2))
    };
    if t.is_finite() {
        t.clamp(lo, hi)
    } else {
        mid
    }
}

struct LineSearch<'a, O> {
    objective: &'a mut CountingObjective<O>,
    x: &'a [f64],
    d: &'a [f64],
    f0: f64,
    slope0: f64,
    c1: f64,
    c2: f64,
    max_probes: usize,
    budget: usize,
    probes: usize,
    best: Option<Probe>,
}

impl<O: Objective> LineSearch<'_, O> {
    fn can_probe(&self) -> bool {
        self.probes < self.max_probes && self.objective.eval_count() < self.budget
    }

    fn probe(&mut self, t: f64) -> Result<Probe, ObjectiveError> {
        let point: Vec<f64> = self.x.iter().zip(self.d).map(|(x, d)| x + t * d).collect();
        let (f, g) = self.objective.eval(&point)?;
        self.probes += 1;
        let slope = dot(&g, self.d);
        let p = Probe { t, f, g, slope };
        if f.is_finite() && self.best.as_ref().is_none_or(|b| f < b.f) {
            self.best = Some(p.clone());
        }
        Ok(p)
    }

    fn armijo(&self, p: &Probe) -> bool {
        p.f.is_finite() && p.f <= self.f0 + self.c1 * p.t * self.slope0
    }

    fn curvature(&self, p: &Probe) -> bool {
        p.slope.abs() <= -self.c2 * self.slope0
    }

    fn give_up(self) -> SearchOutcome {
        match self.best {
            Some(p) if p.f < self.f0 => SearchOutcome::Decrease(p),
            _ => SearchOutcome::NoDecrease,
        }
    }

    fn run(mut self, t_init: f64) -> Result<SearchOutcome, ObjectiveError> {
        let mut prev = Probe {
            t: 0.0,
            f: self.f0,
            g: Vec::new(),
            slope: self.slope0,
        };
        let mut t = t_init;
        let (mut lo, mut hi);
        loop {
            if !self.can_probe() {
                return Ok(self.give_up());
            }
            let cur = self.probe(t)?;
            if !self.armijo(&cur) || (self.probes > 1 && cur.f >= prev.f) {
                (lo, hi) = (prev, cur);
                break;
            }
            if self.curvature(&cur) {
                return Ok(SearchOutcome::Wolfe(cur));
            }
            if cur.slope >= 0.0 {
                (lo, hi) = (cur, prev);
                break;
            }
            let bounds = (cur.t + 0.01 * (cur.t - prev.t), cur.t * 10.0);
            t = cubic_interpolate(
                (prev.t, prev.f, prev.slope),
                (cur.t, cur.f, cur.slope),
                bounds,
            );
            prev = cur;
        }

        // zoom: lo satisfies Armijo and has the lowest value seen so far
        loop {
            if !self.can_probe() {
                return Ok(self.give_up());
            }
            let (a, b) = if lo.t < hi.t {
                (lo.t, hi.t)
            } else {
                (hi.t, lo.t)
            };
            let width = b - a;
            if width <= f64::EPSILON * b.abs().max(f64::MIN_POSITIVE) {
                return Ok(self.give_up());
            }
            let mut t = if hi.f.is_finite() {
                cubic_interpolate((lo.t, lo.f, lo.slope), (hi.t, hi.f, hi.slope), (a, b))
            } else {
                0.5 * (a + b)
            };
            // keep away from the interval ends
            if (t - a).min(b - t) < 0.1 * width {
                t = 0.5 * (a + b);
            }
            let cur = self.probe(t)?;
            if !self.armijo(&cur) || cur.f >= lo.f {
                hi = cur;
            } else {
                if self.curvature(&cur) {
                    return Ok(SearchOutcome::Wolfe(cur));
                }
                if cur.slope * (hi.t - lo.t) >= 0.0 {
                    hi = lo;
                }
                lo = cur;
            }
        }
    }
}

/// Minimises `objective` from `x0` with at most `cfg.budget` evaluations.
///
/// The evaluation at `x0` counts against the budget. The run stops when the
/// budget is spent, when `‖g‖ < cfg.grad_tol`, or when no search direction
/// yields a decrease.
pub fn lbfgs_minimize<O: Objective>(
    objective: &mut CountingObjective<O>,
    x0: &[f64],
    cfg: &LbfgsConfig,
) -> Result<LbfgsRun, LbfgsError> {
    cfg.validate()?;
    let budget = objective.eval_count() + cfg.budget;
    let start = objective.eval_count();
    let mut x = x0.to_vec();
    let (mut f, mut g) = objective.eval(&x)?;
    let used = |o: &CountingObjective<O>| (o.eval_count() - start) as u64;
    let mut trace = vec![(used(objective), f)];
    let mut steps = Vec::new();

    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Ok(LbfgsRun {
            grad_norm: norm(&g),
            x,
            value: f,
            eval_count: used(objective) as usize,
            trace,
            steps,
            termination: Termination::NonFiniteStart,
        });
    }

    let mut history = CurvatureHistory::new(cfg.history_size);
    let mut first = true;
    let termination = loop {
        if norm(&g) < cfg.grad_tol {
            break Termination::Converged;
        }
        if objective.eval_count() >= budget {
            break Termination::BudgetExhausted;
        }

        let mut fallback = history.is_empty() && !first;
        let mut d = if history.is_empty() {
            g.iter().map(|v| -v).collect()
        } else {
            history.direction(&g)
        };
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            history.clear();
            fallback = true;
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }
        let t_init = if history.is_empty() { cfg.lr } else { 1.0 };
        first = false;

        let mut outcome = search(objective, &x, &d, f, slope, t_init, cfg, budget)?;
        if matches!(outcome, SearchOutcome::NoDecrease) && !history.is_empty() {
            history.clear();
            fallback = true;
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
            outcome = search(objective, &x, &d, f, slope, cfg.lr, cfg, budget)?;
        }

        let (probe, wolfe) = match outcome {
            SearchOutcome::Wolfe(p) => (p, true),
            SearchOutcome::Decrease(p) => (p, false),
            SearchOutcome::NoDecrease => {
                if objective.eval_count() >= budget {
                    break Termination::BudgetExhausted;
                }
                break Termination::Stalled;
            }
        };

        let s: Vec<f64> = d.iter().map(|v| probe.t * v).collect();
        let y: Vec<f64> = probe.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        steps.push(AcceptedStep {
            step_length: probe.t,
            f_before: f,
            f_after: probe.f,
            slope_before: slope,
            slope_after: probe.slope,
            wolfe,
            steepest_descent_fallback: fallback,
        });
        axpy(1.0, &s, &mut x);
        f = probe.f;
        g = probe.g;
        history.push(s, y);
        trace.push((used(objective), f));
    };

    Ok(LbfgsRun {
        grad_norm: norm(&g),
        x,
        value: f,
        eval_count: used(objective) as usize,
        trace,
        steps,
        termination,
    })
}

#[allow(clippy::too_many_arguments)]
fn search<O: Objective>(
    objective: &mut CountingObjective<O>,
    x: &[f64],
    d: &[f64],
    f0: f64,
    slope0: f64,
    t_init: f64,
    cfg: &LbfgsConfig,
    budget: usize,
) -> Result<SearchOutcome, ObjectiveError> {
    LineSearch {
        objective,
        x,
        d,
        f0,
        slope0,
        c1: cfg.wolfe_c1,
        c2: cfg.wolfe_c2,
        max_probes: cfg.max_ls_evals,
        budget,
        probes: 0,
        best: None,
    }
    .run(t_init)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::Rosenbrock;

    struct Parabola;

    impl Objective for Parabola {
        fn dim(&self) -> usize {
            1
        }
        fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
            grad[0] = x[0];
            0.5 * x[0] * x[0]
        }
    }

    #[test]
    fn one_dimensional_parabola() {
        let mut obj = CountingObjective::new(Parabola);
        let cfg = LbfgsConfig {
            budget: 4,
            ..LbfgsConfig::default()
        };
        let run = lbfgs_minimize(&mut obj, &[3.0], &cfg).unwrap();
        assert!(run.x[0].abs() <= 1e-10, "x = {}", run.x[0]);
        assert!(run.eval_count <= 4);
        assert_eq!(run.eval_count, obj.eval_count());
    }

    #[test]
    fn cubic_interpolation_exact_on_quadratics() {
        // φ(t) = (t - 0.3)², sampled at 0 and 1
        let phi = |t: f64| ((t - 0.3) * (t - 0.3), 2.0 * (t - 0.3));
        let (f0, g0) = phi(0.0);
        let (f1, g1) = phi(1.0);
        let t = cubic_interpolate((0.0, f0, g0), (1.0, f1, g1), (0.0, 1.0));
        assert!((t - 0.3).abs() < 1e-12);
        let t = cubic_interpolate((1.0, f1, g1), (0.0, f0, g0), (0.0, 1.0));
        assert!((t - 0.3).abs() < 1e-12);
    }

    #[test]
    fn history_skips_non_positive_curvature() {
        let mut h = CurvatureHistory::new(2);
        assert!(!h.push(vec![1.0, 0.0], vec![-1.0, 0.0]));
        assert!(!h.push(vec![1.0, 0.0], vec![0.0, 1.0]));
        assert!(h.is_empty());
        assert!(h.push(vec![1.0, 0.0], vec![2.0, 0.0]));
        assert!(h.push(vec![0.0, 1.0], vec![0.0, 3.0]));
        assert!(h.push(vec![1.0, 1.0], vec![1.0, 1.0]));
        assert_eq!(h.pairs.len(), 2);
        assert_eq!(h.pairs[0].s, vec![0.0, 1.0]);
    }

    #[test]
    fn two_loop_recovers_newton_step_on_diagonal_quadratic() {
        // A = diag(2, 3), pairs along the axes give H = A⁻¹ exactly
        let mut h = CurvatureHistory::new(5);
        h.push(vec![1.0, 0.0], vec![2.0, 0.0]);
        h.push(vec![0.0, 1.0], vec![0.0, 3.0]);
        let d = h.direction(&[4.0, 9.0]);
        assert!((d[0] + 2.0).abs() < 1e-12);
        assert!((d[1] + 3.0).abs() < 1e-12);
    }

    #[test]
    fn budget_is_never_exceeded() {
        for budget in [1, 2, 3, 7, 50, 333] {
            let mut obj = CountingObjective::new(Rosenbrock::new(10).unwrap());
            let cfg = LbfgsConfig {
                budget,
                lr: 0.1,
                ..LbfgsConfig::default()
            };
            let run = lbfgs_minimize(&mut obj, &[-1.5; 10], &cfg).unwrap();
            assert!(run.eval_count <= budget);
            assert_eq!(run.eval_count, obj.eval_count());
            if run.termination == Termination::BudgetExhausted {
                assert_eq!(run.eval_count, budget);
            }
        }
    }

    #[test]
    fn non_finite_start_reported() {
        struct Bad;
        impl Objective for Bad {
            fn dim(&self) -> usize {
                2
            }
            fn value_grad(&self, _: &[f64], grad: &mut [f64]) -> f64 {
                grad.fill(0.0);
                f64::NAN
            }
        }
        let mut obj = CountingObjective::new(Bad);
        let run = lbfgs_minimize(&mut obj, &[0.0, 0.0], &LbfgsConfig::default()).unwrap();
        assert_eq!(run.termination, Termination::NonFiniteStart);
        assert_eq!(run.eval_count, 1);
    }

    #[test]
    fn config_validation() {
        let ok = LbfgsConfig::default();
        ok.validate().unwrap();
        assert!(LbfgsConfig {
            history_size: 0,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(LbfgsConfig {
            wolfe_c1: 0.95,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(LbfgsConfig {
            wolfe_c2: 1.0,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(LbfgsConfig {
            budget: 0,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(LbfgsConfig { lr: -1.0, ..ok }.validate().is_err());
    }
}
