//! One-sided continuity of sampled signals and the relaxed Barbălat lemma:
//! an integrable `ρ(f)` forces `f → 0` when `f` or `−f` is quasi-uniformly
//! continuous (upward moves are uniformly slow) and either `ρ` is
//! non-decreasing or `f` is bounded.
//!
//! Every verdict here is relative to the sampling grid and horizon: "QUC"
//! means no violating pair exists among the samples.

use rayon::prelude::*;
use serde::Serialize;

use crate::certificates::ComparisonFn;
use crate::error::{Error, Result};

pub const DEFAULT_EPS: [f64; 3] = [0.5, 0.1, 0.01];
pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_HORIZON: f64 = 100.0;
/// Share of the total integral the last quarter may add before the integral
/// is diagnosed as divergent.
pub const TAIL_GROWTH_LIMIT: f64 = 0.01;
/// Fraction of the horizon over which the tail sup is observed.
pub const DEFAULT_TAIL_FRACTION: f64 = 0.01;

/// A signal on the uniform grid `t_i = i·dt`, `i = 0..len`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Signal {
    name: String,
    dt: f64,
    values: Vec<f64>,
}

/// `i·dt`, exact at integers when `1/dt` is an integer.
fn grid_time(i: usize, dt: f64) -> f64 {
    let m = (1.0 / dt).round();
    if m >= 1.0 && (m * dt - 1.0).abs() < 1e-12 {
        i as f64 / m
    } else {
        i as f64 * dt
    }
}

impl Signal {
    pub fn new(name: impl Into<String>, dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidConfig(format!("signal step must be > 0, got {dt}")));
        }
        if values.is_empty() {
            return Err(Error::InvalidConfig("signal has no samples".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "signal value".into(), coordinate: i });
        }
        Ok(Self { name: name.into(), dt, values })
    }

    /// Samples `f` on `[0, horizon]`.
    pub fn sample(name: impl Into<String>, dt: f64, horizon: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        if !(dt > 0.0) || !(horizon >= 0.0) {
            return Err(Error::InvalidConfig(format!("need dt > 0 and horizon ≥ 0, got {dt}, {horizon}")));
        }
        let n = (horizon / dt + 1e-9).floor() as usize + 1;
        Self::new(name, dt, (0..n).map(|i| f(grid_time(i, dt))).collect())
    }

    /// From `(t, v)` columns on a uniform grid starting at 0 (e.g. a trajectory CSV).
    pub fn from_columns(name: impl Into<String>, t: &[f64], v: &[f64]) -> Result<Self> {
        if t.len() != v.len() || t.len() < 2 {
            return Err(Error::InvalidConfig("need at least two (t, v) rows of equal length".into()));
        }
        let dt = t[1] - t[0];
        if t[0].abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!("signal must start at t = 0, starts at {}", t[0])));
        }
        for (i, w) in t.windows(2).enumerate() {
            if ((w[1] - w[0]) - dt).abs() > 1e-6 * dt {
                return Err(Error::InvalidConfig(format!("grid is not uniform at row {}", i + 1)));
            }
        }
        Self::new(name, dt, v.to_vec())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        grid_time(i, self.dt)
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.len() - 1)
    }

    pub fn negated(&self) -> Self {
        Self { name: format!("-({})", self.name), dt: self.dt, values: self.values.iter().map(|v| -v).collect() }
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Names accepted by [`catalog_signal`].
pub const SIGNAL_NAMES: [&str; 9] = ["sin", "neg-floor", "floor", "sin-sq", "neg-t", "t", "inv-1pt", "spike-train", "zero"];

/// Triangular spikes of height 1 at `t = k ≥ 1` with base width `2^{1−k}`
/// (area `2^{−k}`, total area 1), zero elsewhere.
pub fn spike_train(t: f64) -> f64 {
    let k = t.round();
    if k < 1.0 {
        return 0.0;
    }
    let half = 2f64.powf(-k);
    (1.0 - (t - k).abs() / half).max(0.0)
}

/// A named catalog signal; `dt`/`horizon` override the per-signal defaults
/// (1e-3 and 100, except `sin-sq` at dt 1e-2, `spike-train` at dt 1e-4 and
/// `inv-1pt` to horizon 1000).
pub fn catalog_signal(name: &str, dt: Option<f64>, horizon: Option<f64>) -> Result<Signal> {
    let (f, d, h): (fn(f64) -> f64, f64, f64) = match name {
        "sin" => (f64::sin, DEFAULT_DT, DEFAULT_HORIZON),
        "neg-floor" => (|t: f64| -t.floor(), DEFAULT_DT, DEFAULT_HORIZON),
        "floor" => (f64::floor, DEFAULT_DT, DEFAULT_HORIZON),
        "sin-sq" => (|t: f64| (t * t).sin(), 1e-2, DEFAULT_HORIZON),
        "neg-t" => (|t: f64| -t, DEFAULT_DT, DEFAULT_HORIZON),
        "t" => (|t: f64| t, DEFAULT_DT, DEFAULT_HORIZON),
        "inv-1pt" => (|t: f64| 1.0 / (1.0 + t), DEFAULT_DT, 1000.0),
        "spike-train" => (spike_train, 1e-4, DEFAULT_HORIZON),
        "zero" => (|_| 0.0, DEFAULT_DT, DEFAULT_HORIZON),
        other => {
            return Err(Error::InvalidConfig(format!("unknown signal `{other}` (known: {})", SIGNAL_NAMES.join(", "))))
        }
    };
    Signal::sample(name, dt.unwrap_or(d), horizon.unwrap_or(h), f)
}

/// Largest forward increment `max f(t_j) − f(t_i)` over `0 < j − i ≤ k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IncrementLevel {
    pub steps: usize,
    pub delta: f64,
    pub max_increment: f64,
    pub t0: f64,
    pub t: f64,
}

/// Increment levels for `k = 1, 2, 4, …` (sparse-table doubling).
fn increment_levels(sig: &Signal) -> Vec<IncrementLevel> {
    let f = sig.values();
    let n = f.len();
    let mut levels = Vec::new();
    // best[i] = (max f over (i, i+k], argmax)
    let mut best: Vec<(f64, usize)> = (0..n.saturating_sub(1)).map(|i| (f[i + 1], i + 1)).collect();
    let mut k = 1;
    while k < n {
        let (inc, i, j) = best
            .par_iter()
            .enumerate()
            .map(|(i, &(m, j))| (m - f[i], i, j))
            .reduce(|| (f64::NEG_INFINITY, usize::MAX, 0), |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
        levels.push(IncrementLevel {
            steps: k,
            delta: k as f64 * sig.dt,
            max_increment: inc,
            t0: sig.time(i),
            t: sig.time(j),
        });
        let next = 2 * k;
        if next >= n - 1 {
            // the whole horizon in one window
            if k < n - 1 {
                let (inc, i, j) = whole_window(f);
                levels.push(IncrementLevel {
                    steps: n - 1,
                    delta: (n - 1) as f64 * sig.dt,
                    max_increment: inc,
                    t0: sig.time(i),
                    t: sig.time(j),
                });
            }
            break;
        }
        best = (0..n - 1)
            .into_par_iter()
            .map(|i| {
                let a = best[i];
                match best.get(i + k) {
                    Some(&b) if b.0 > a.0 => b,
                    _ => a,
                }
            })
            .collect();
        k = next;
    }
    levels
}

fn whole_window(f: &[f64]) -> (f64, usize, usize) {
    let n = f.len();
    let mut best = (f64::NEG_INFINITY, 0, 0);
    let mut suffix = (f[n - 1], n - 1);
    for i in (0..n - 1).rev() {
        let inc = suffix.0 - f[i];
        if inc >= best.0 {
            best = (inc, i, suffix.1);
        }
        if f[i] > suffix.0 {
            suffix = (f[i], i);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QucEntry {
    pub epsilon: f64,
    pub quc: bool,
    /// Largest accepted δ on the geometric grid.
    pub delta: Option<f64>,
    /// Violating pair at δ = dt when not QUC.
    pub witness: Option<(f64, f64)>,
    pub increment: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QucReport {
    pub signal: String,
    pub dt: f64,
    pub horizon: f64,
    pub entries: Vec<QucEntry>,
    pub levels: Vec<IncrementLevel>,
}

impl QucReport {
    /// QUC for every tested ε.
    pub fn all_quc(&self) -> bool {
        self.entries.iter().all(|e| e.quc)
    }

    pub fn entry(&self, epsilon: f64) -> Option<&QucEntry> {
        self.entries.iter().find(|e| e.epsilon == epsilon)
    }
}

/// For each ε: the largest `δ ∈ {dt, 2dt, 4dt, …}` with `f(t) − f(t₀) < ε`
/// for all sampled `t₀ ≤ t ≤ t₀ + δ`, or a violating pair if even `δ = dt` fails.
pub fn quc_verdict(sig: &Signal, eps_list: &[f64]) -> Result<QucReport> {
    if eps_list.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidConfig("epsilons must be > 0".into()));
    }
    if sig.horizon() < 10.0 * sig.dt * (1.0 - 1e-9) {
        return Err(Error::HorizonTooShort { horizon: sig.horizon(), dt: sig.dt });
    }
    let levels = increment_levels(sig);
    let entries = eps_list
        .iter()
        .map(|&eps| {
            let accepted = levels.iter().take_while(|l| l.max_increment < eps).last();
            match accepted {
                Some(l) => QucEntry { epsilon: eps, quc: true, delta: Some(l.delta), witness: None, increment: Some(l.max_increment) },
                None => QucEntry {
                    epsilon: eps,
                    quc: false,
                    delta: None,
                    witness: Some((levels[0].t0, levels[0].t)),
                    increment: Some(levels[0].max_increment),
                },
            }
        })
        .collect();
    Ok(QucReport { signal: sig.name.clone(), dt: sig.dt, horizon: sig.horizon(), entries, levels })
}

/// Two-sided version: `|f(t) − f(t₀)| < ε` within δ. Returns, per ε, the
/// smaller of the δs accepted for `f` and `−f`.
pub fn uc_verdict(sig: &Signal, eps_list: &[f64]) -> Result<Vec<Option<f64>>> {
    let up = quc_verdict(sig, eps_list)?;
    let down = quc_verdict(&sig.negated(), eps_list)?;
    Ok(up
        .entries
        .iter()
        .zip(&down.entries)
        .map(|(a, b)| match (a.delta, b.delta) {
            (Some(x), Some(y)) => Some(x.min(y)),
            _ => None,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prop2Report {
    pub m: f64,
    pub holds: bool,
    /// Largest `g(t_{i+1}) − g(t_i)` with `g = f − M·t` (0 if none is positive).
    pub worst_increase: f64,
    /// Start of the first step where `g` increases.
    pub witness_t: Option<f64>,
}

const PROP2_TOL: f64 = 1e-12;

/// `g(t) = f(t) − M·t` non-increasing on the grid (to 1e-12).
pub fn prop2_check(sig: &Signal, m: f64) -> Result<Prop2Report> {
    if !(m >= 0.0) {
        return Err(Error::InvalidConfig(format!("M must be ≥ 0, got {m}")));
    }
    let g = |i: usize| sig.values[i] - m * sig.time(i);
    let mut worst = 0.0f64;
    let mut first = None;
    for i in 0..sig.len().saturating_sub(1) {
        let inc = g(i + 1) - g(i);
        worst = worst.max(inc);
        if inc > PROP2_TOL && first.is_none() {
            first = Some(sig.time(i));
        }
    }
    Ok(Prop2Report { m, holds: first.is_none(), worst_increase: worst, witness_t: first })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Lemma3Outcome {
    /// Hypotheses met and the observed tail is small.
    Confirmed,
    /// Hypotheses met but the tail stays large (a grid artefact or a bug).
    Contradicted,
    /// Hypotheses not met: the lemma predicts nothing.
    NoConclusion,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma3Report {
    pub signal: String,
    pub rho: ComparisonFn,
    pub dt: f64,
    pub horizon: f64,
    /// Trapezoid estimate of `∫ρ(f)`.
    pub integral: f64,
    /// Contribution of the last quarter of the horizon.
    pub last_quarter: f64,
    pub integral_finite: bool,
    pub f_quc: QucReport,
    pub neg_f_quc: QucReport,
    pub quc_either: bool,
    pub rho_monotone: bool,
    /// Running sup no longer growing over the last quarter.
    pub f_bounded: bool,
    pub sup_f: f64,
    pub hypotheses_met: bool,
    pub tail_fraction: f64,
    pub tail_sup: f64,
    pub prediction: String,
    pub outcome: Lemma3Outcome,
}

/// Evaluates the lemma's hypotheses on a sampled nonnegative signal and
/// compares its conclusion with the observed tail.
pub fn lemma3_check(sig: &Signal, rho: &ComparisonFn, rho_monotone: bool) -> Result<Lemma3Report> {
    lemma3_check_with(sig, rho, rho_monotone, &DEFAULT_EPS, DEFAULT_TAIL_FRACTION)
}

pub fn lemma3_check_with(
    sig: &Signal,
    rho: &ComparisonFn,
    rho_monotone: bool,
    eps_list: &[f64],
    tail_fraction: f64,
) -> Result<Lemma3Report> {
    if let Some(i) = sig.values.iter().position(|v| *v < 0.0) {
        return Err(Error::InvalidConfig(format!("signal must be nonnegative, f({}) < 0", sig.time(i))));
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!("tail fraction must be in (0, 1], got {tail_fraction}")));
    }
    let n = sig.len();
    let r: Vec<f64> = sig.values.iter().map(|&v| rho.value(v)).collect();
    let quarter = (3 * (n - 1)) / 4;
    let mut integral = 0.0;
    let mut before_quarter = 0.0;
    for i in 0..n - 1 {
        if i == quarter {
            before_quarter = integral;
        }
        integral += 0.5 * sig.dt * (r[i] + r[i + 1]);
    }
    if quarter >= n - 1 {
        before_quarter = integral;
    }
    let last_quarter = integral - before_quarter;
    let integral_finite = integral.is_finite() && last_quarter <= TAIL_GROWTH_LIMIT * integral;

    let f_quc = quc_verdict(sig, eps_list)?;
    let neg_f_quc = quc_verdict(&sig.negated(), eps_list)?;
    let quc_either = f_quc.all_quc() || neg_f_quc.all_quc();

    let sup_f = sig.sup();
    let early = sig.values[..=quarter].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let f_bounded = sup_f <= early;
    let hypotheses_met = quc_either && integral_finite && (rho_monotone || f_bounded);

    let tail_start = (((1.0 - tail_fraction) * (n - 1) as f64).floor() as usize).min(n - 1);
    let tail_sup = sig.values[tail_start..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tail_small = sup_f <= 0.0 || tail_sup <= 0.01 * sup_f;
    let outcome = match (hypotheses_met, tail_small) {
        (false, _) => Lemma3Outcome::NoConclusion,
        (true, true) => Lemma3Outcome::Confirmed,
        (true, false) => Lemma3Outcome::Contradicted,
    };
    Ok(Lemma3Report {
        signal: sig.name.clone(),
        rho: *rho,
        dt: sig.dt,
        horizon: sig.horizon(),
        integral,
        last_quarter,
        integral_finite,
        f_quc,
        neg_f_quc,
        quc_either,
        rho_monotone,
        f_bounded,
        sup_f,
        hypotheses_met,
        tail_fraction,
        tail_sup,
        prediction: if hypotheses_met { "tail -> 0 (expected)".into() } else { "no conclusion".into() },
        outcome,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_hits_integers() {
        let s = catalog_signal("floor", None, Some(5.0)).unwrap();
        assert_eq!(s.values()[3000], 3.0);
        assert_eq!(s.values()[2999], 2.0);
        assert_eq!(s.horizon(), 5.0);
    }

    #[test]
    fn floor_witness_is_the_jump() {
        let s = catalog_signal("floor", Some(0.01), Some(10.0)).unwrap();
        let r = quc_verdict(&s, &[0.5]).unwrap();
        let e = &r.entries[0];
        assert!(!e.quc);
        let (t0, t) = e.witness.unwrap();
        assert!((t0 - 0.99).abs() < 1e-12 && (t - 1.0).abs() < 1e-12, "{t0} {t}");
    }

    #[test]
    fn neg_floor_is_quc_for_all_eps() {
        let s = catalog_signal("neg-floor", None, Some(10.0)).unwrap();
        assert!(quc_verdict(&s, &DEFAULT_EPS).unwrap().all_quc());
        assert!(!quc_verdict(&s.negated(), &[0.5]).unwrap().all_quc());
    }

    #[test]
    fn levels_match_brute_force() {
        let s = Signal::new("x", 0.1, vec![0.0, 2.0, -1.0, 0.5, 3.0, -2.0, 1.0, 0.0, 0.2, 0.1, 0.0, 4.0]).unwrap();
        for l in increment_levels(&s) {
            let f = s.values();
            let mut best = f64::NEG_INFINITY;
            for i in 0..f.len() {
                for j in i + 1..=(i + l.steps).min(f.len() - 1) {
                    best = best.max(f[j] - f[i]);
                }
            }
            assert_eq!(best, l.max_increment, "k = {}", l.steps);
        }
    }

    #[test]
    fn prop2_by_hand() {
        let t = catalog_signal("t", None, Some(10.0)).unwrap();
        assert!(prop2_check(&t, 1.0).unwrap().holds);
        assert!(prop2_check(&catalog_signal("neg-t", None, Some(10.0)).unwrap(), 0.0).unwrap().holds);
        let s = catalog_signal("sin", None, Some(10.0)).unwrap();
        assert!(prop2_check(&s, 1.0).unwrap().holds);
        let r = prop2_check(&s, 0.5).unwrap();
        assert!(!r.holds && r.witness_t.unwrap() < 0.01, "{r:?}");
    }

    #[test]
    fn zero_signal() {
        let r = lemma3_check(&catalog_signal("zero", None, Some(10.0)).unwrap(), &ComparisonFn::Quadratic { c: 1.0 }, true)
            .unwrap();
        assert_eq!(r.integral, 0.0);
        assert!(r.hypotheses_met);
        assert_eq!(r.tail_sup, 0.0);
        assert_eq!(r.outcome, Lemma3Outcome::Confirmed);
    }

    #[test]
    fn spike_areas() {
        assert_eq!(spike_train(3.0), 1.0);
        assert_eq!(spike_train(0.0), 0.0);
        assert_eq!(spike_train(1.25), 0.5);
        assert_eq!(spike_train(1.6), 0.0);
    }

    #[test]
    fn too_short_horizon() {
        let s = Signal::new("x", 1.0, vec![0.0; 5]).unwrap();
        assert!(matches!(quc_verdict(&s, &[0.1]), Err(Error::HorizonTooShort { .. })));
    }
}
