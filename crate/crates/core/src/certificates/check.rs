use rayon::prelude::*;
use serde::Serialize;

use super::dini::{forward_quotients, Observe, DEFAULT_DINI_STEPS};
use super::{ids, Certificate, CertificateSummary, ScalarField, Side, Target, Tolerance};
use crate::error::{Error, Result};
use crate::integrate::{integrate_dde, integrate_ode, IntegratorConfig, Trajectory};
use crate::systems::{euclid, sup_norm, DelaySystem, History, HistoryQuery, OdeSystem, StateVec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }
}

/// Sampling settings shared by all checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckConfig {
    /// Radius `R` of the sampled ball `B_R ∩ Ω`.
    pub radius: f64,
    /// Number of sampled states (0 checks trajectories only).
    pub samples: usize,
    pub seed: u64,
    pub tol: Tolerance,
    pub dini_steps: Vec<f64>,
    /// Knots per trajectory at which pointwise conditions are evaluated.
    pub max_knots: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            radius: 1.0,
            samples: 200,
            seed: 0,
            tol: Tolerance::default(),
            dini_steps: DEFAULT_DINI_STEPS.to_vec(),
            max_knots: 400,
        }
    }
}

impl CheckConfig {
    fn h_max(&self) -> f64 {
        self.dini_steps.iter().copied().fold(0.0, f64::max)
    }

    fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) {
            return Err(Error::InvalidConfig(format!("radius must be > 0, got {}", self.radius)));
        }
        if self.dini_steps.is_empty() || self.dini_steps.iter().any(|h| !(*h > 0.0)) {
            return Err(Error::InvalidConfig("Dini steps must be positive and non-empty".into()));
        }
        if self.max_knots < 2 {
            return Err(Error::InvalidConfig("max_knots must be ≥ 2".into()));
        }
        Ok(())
    }
}

/// Verdict and worst case for one inequality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub id: String,
    pub description: String,
    pub verdict: Verdict,
    /// Signed `rhs − lhs` at the witness: the worst failing point (by margin
    /// plus allowance) if any point fails, otherwise the smallest margin seen.
    pub margin: f64,
    /// Trajectory time of the witness (absent for sampled states).
    pub witness_t: Option<f64>,
    /// State at the witness (the current point `x(0)` for delay systems).
    pub witness_state: Vec<f64>,
    /// `sample <i>` or `trajectory <j>`.
    pub witness_source: String,
    pub points: usize,
    pub failures: usize,
}

/// Sampled `sup{V + W : x ∈ Ω, |x| ≤ s}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShellSup {
    pub radius: f64,
    pub sup: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub system: String,
    pub certificate: CertificateSummary,
    pub config: CheckConfig,
    pub trajectories: usize,
    pub conditions: Vec<ConditionReport>,
    pub shells: Vec<ShellSup>,
    pub overall: Verdict,
}

impl CheckReport {
    pub fn condition(&self, id: &str) -> Option<&ConditionReport> {
        self.conditions.iter().find(|c| c.id == id)
    }

    pub fn passed(&self) -> bool {
        self.overall.is_pass()
    }

    /// Smallest margin over all conditions.
    pub fn min_margin(&self) -> f64 {
        self.conditions.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone)]
struct Witness {
    t: Option<f64>,
    state: Vec<f64>,
    source: String,
}

struct Tracker {
    id: &'static str,
    description: String,
    tol: Tolerance,
    points: usize,
    failures: usize,
    min: Option<(f64, Witness)>,
    worst_fail: Option<(f64, f64, Witness)>,
}

impl Tracker {
    fn new(id: &'static str, description: impl Into<String>, tol: Tolerance) -> Self {
        Self { id, description: description.into(), tol, points: 0, failures: 0, min: None, worst_fail: None }
    }

    fn push(&mut self, lhs: f64, rhs: f64, w: &Witness) {
        self.points += 1;
        let margin = rhs - lhs;
        let margin = if margin.is_nan() { f64::NEG_INFINITY } else { margin };
        if self.min.as_ref().is_none_or(|(m, _)| margin < *m) {
            self.min = Some((margin, w.clone()));
        }
        let allowance = self.tol.allowance(rhs);
        if !(margin >= -allowance) {
            self.failures += 1;
            let score = margin + allowance;
            if self.worst_fail.as_ref().is_none_or(|(s, _, _)| score < *s) {
                self.worst_fail = Some((score, margin, w.clone()));
            }
        }
    }

    fn finish(self) -> ConditionReport {
        let verdict = if self.failures == 0 { Verdict::Pass } else { Verdict::Fail };
        let (margin, w) = match (self.worst_fail, self.min) {
            (Some((_, m, w)), _) => (m, Some(w)),
            (None, Some((m, w))) => (m, Some(w)),
            (None, None) => (0.0, None),
        };
        let (witness_t, witness_state, witness_source) = match w {
            Some(w) => (w.t, w.state, w.source),
            None => (None, Vec::new(), "none".to_string()),
        };
        ConditionReport {
            id: self.id.to_string(),
            description: self.description,
            verdict,
            margin,
            witness_t,
            witness_state,
            witness_source,
            points: self.points,
            failures: self.failures,
        }
    }
}

/// ODE states or delay segments, seen uniformly by the checker.
trait Space: Sync {
    type Arg: ?Sized;
    type Sample: Sync + Send;

    fn name(&self) -> &str;
    fn sample(&self, cfg: &CheckConfig) -> Result<Vec<Self::Sample>>;
    fn with_sample<R>(&self, s: &Self::Sample, f: impl FnOnce(&Self::Arg) -> R) -> R;
    fn with_zero<R>(&self, f: impl FnOnce(&Self::Arg) -> R) -> R;
    fn output_norm(&self, a: &Self::Arg) -> f64;
    fn state_norm(&self, a: &Self::Arg) -> f64;
    fn point(&self, a: &Self::Arg) -> Vec<f64>;
    fn in_domain(&self, a: &Self::Arg) -> bool;
    fn has_domain(&self) -> bool;
    fn short_trajectory(&self, s: &Self::Sample, h_max: f64) -> Result<Trajectory>;
    fn initial_norm(&self, traj: &Trajectory) -> f64;
    fn owns(&self, traj: &Trajectory) -> bool;
}

struct OdeSpace<'a>(&'a OdeSystem);

impl Space for OdeSpace<'_> {
    type Arg = [f64];
    type Sample = StateVec;

    fn name(&self) -> &str {
        self.0.name()
    }

    fn sample(&self, cfg: &CheckConfig) -> Result<Vec<StateVec>> {
        self.0.sample_domain(cfg.radius, cfg.samples, cfg.seed)
    }

    fn with_sample<R>(&self, s: &StateVec, f: impl FnOnce(&[f64]) -> R) -> R {
        f(s)
    }

    fn with_zero<R>(&self, f: impl FnOnce(&[f64]) -> R) -> R {
        f(&vec![0.0; self.0.dim()])
    }

    fn output_norm(&self, a: &[f64]) -> f64 {
        euclid(&(self.0.output_fn())(a))
    }

    fn state_norm(&self, a: &[f64]) -> f64 {
        euclid(a)
    }

    fn point(&self, a: &[f64]) -> Vec<f64> {
        a.to_vec()
    }

    fn in_domain(&self, a: &[f64]) -> bool {
        self.0.in_domain(a)
    }

    fn has_domain(&self) -> bool {
        self.0.has_domain()
    }

    fn short_trajectory(&self, s: &StateVec, h_max: f64) -> Result<Trajectory> {
        integrate_ode(self.0, s, &IntegratorConfig::default().with_t_final(2.0 * h_max))
    }

    fn initial_norm(&self, traj: &Trajectory) -> f64 {
        euclid(&traj.states()[0])
    }

    fn owns(&self, traj: &Trajectory) -> bool {
        traj.delay().is_none() && traj.dim() == self.0.dim()
    }
}

struct DelaySpace<'a>(&'a DelaySystem);

impl Space for DelaySpace<'_> {
    type Arg = dyn HistoryQuery + 'static;
    type Sample = History;

    fn name(&self) -> &str {
        self.0.name()
    }

    fn sample(&self, cfg: &CheckConfig) -> Result<Vec<History>> {
        self.0.sample_domain(cfg.radius, cfg.samples, cfg.seed)
    }

    fn with_sample<R>(&self, s: &History, f: impl FnOnce(&(dyn HistoryQuery + 'static)) -> R) -> R {
        f(s)
    }

    fn with_zero<R>(&self, f: impl FnOnce(&(dyn HistoryQuery + 'static)) -> R) -> R {
        f(&History::zero(self.0.delay(), self.0.dim()))
    }

    fn output_norm(&self, a: &dyn HistoryQuery) -> f64 {
        euclid(&(self.0.output_fn())(a))
    }

    fn state_norm(&self, a: &dyn HistoryQuery) -> f64 {
        sup_norm(a)
    }

    fn point(&self, a: &dyn HistoryQuery) -> Vec<f64> {
        a.current()
    }

    fn in_domain(&self, a: &dyn HistoryQuery) -> bool {
        self.0.in_domain(a)
    }

    fn has_domain(&self) -> bool {
        self.0.has_domain()
    }

    fn short_trajectory(&self, s: &History, h_max: f64) -> Result<Trajectory> {
        let r = self.0.delay();
        let m = (r / h_max).floor().max(1.0);
        let step = r / m;
        let tf = (h_max / step).ceil().max(1.0) * step;
        integrate_dde(self.0, s, &IntegratorConfig::default().with_dde_step(step).with_t_final(tf))
    }

    fn initial_norm(&self, traj: &Trajectory) -> f64 {
        traj.initial_history().map_or(0.0, |h| h.sup_norm())
    }

    fn owns(&self, traj: &Trajectory) -> bool {
        traj.delay().is_some_and(|r| (r - self.0.delay()).abs() <= 1e-12 * r) && traj.dim() == self.0.dim()
    }
}

#[derive(Debug, Clone, Copy)]
struct Needs {
    dv: bool,
    dw: bool,
}

struct PointEval {
    witness: Witness,
    w: f64,
    v: Option<f64>,
    out_norm: f64,
    state_norm: f64,
    dv: Option<f64>,
    /// (max, min) forward quotient, or the closed form twice
    dw: Option<(f64, f64)>,
}

fn derivative<A: ?Sized>(
    field: &ScalarField<A>,
    arg: &A,
    traj: Option<(&Trajectory, f64)>,
    steps: &[f64],
) -> Result<Option<(f64, f64)>>
where
    Trajectory: Observe<A>,
{
    if let Some(d) = field.closed_form_derivative(arg) {
        return Ok(Some((d, d)));
    }
    match traj {
        Some((tr, t)) if t + steps.iter().copied().fold(0.0, f64::max) <= tr.t_final() => {
            forward_quotients(field, tr, t, steps).map(Some)
        }
        _ => Ok(None),
    }
}

fn eval_point<S: Space>(
    space: &S,
    cert: &Certificate<S::Arg>,
    needs: Needs,
    arg: &S::Arg,
    traj: Option<(&Trajectory, f64)>,
    steps: &[f64],
    witness_t: Option<f64>,
    source: String,
) -> Result<PointEval>
where
    Trajectory: Observe<S::Arg>,
{
    let dv = match (needs.dv, cert.v()) {
        (true, Some(v)) => derivative(v, arg, traj, steps)?.map(|(hi, _)| hi),
        _ => None,
    };
    let dw = if needs.dw { derivative(cert.w(), arg, traj, steps)? } else { None };
    Ok(PointEval {
        witness: Witness { t: witness_t, state: space.point(arg), source },
        w: cert.w().eval(arg),
        v: cert.v().map(|v| v.eval(arg)),
        out_norm: space.output_norm(arg),
        state_norm: space.state_norm(arg),
        dv,
        dw,
    })
}

fn knot_subset(len: usize, max: usize) -> Vec<usize> {
    if len <= max {
        return (0..len).collect();
    }
    let mut idx: Vec<usize> =
        (0..max).map(|k| ((k as f64) * (len - 1) as f64 / (max - 1) as f64).round() as usize).collect();
    idx.dedup();
    idx
}

enum Item {
    Sample(usize),
    Knot(usize, f64),
}

fn run<S: Space>(
    space: &S,
    cert: &Certificate<S::Arg>,
    expected: &[Target],
    cfg: &CheckConfig,
    trajs: &[Trajectory],
) -> Result<CheckReport>
where
    Trajectory: Observe<S::Arg>,
{
    cfg.validate()?;
    let target = cert.target();
    if !expected.contains(&target) {
        return Err(Error::Certificate(format!(
            "certificate `{}` targets {target}, this check needs {}",
            cert.name(),
            expected.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" or ")
        )));
    }
    let h_max = cfg.h_max();
    for (j, tr) in trajs.iter().enumerate() {
        if !space.owns(tr) {
            return Err(Error::InvalidConfig(format!("trajectory {j} does not belong to system `{}`", space.name())));
        }
        if tr.t_final() < h_max {
            return Err(Error::InvalidConfig(format!(
                "trajectory {j} horizon {} is shorter than the largest Dini step {h_max}",
                tr.t_final()
            )));
        }
    }
    let needs = match target {
        Target::Thm1 | Target::Cor1 | Target::Thm2 | Target::Cor2 => Needs { dv: true, dw: true },
        Target::Prop1 => Needs { dv: false, dw: true },
    };

    let samples = if cfg.samples > 0 { space.sample(cfg)? } else { Vec::new() };
    let mut items: Vec<Item> = (0..samples.len()).map(Item::Sample).collect();
    for (j, tr) in trajs.iter().enumerate() {
        for i in knot_subset(tr.len(), cfg.max_knots) {
            items.push(Item::Knot(j, tr.times()[i]));
        }
    }
    let needs_short = |s: &S::Sample| -> bool {
        space.with_sample(s, |a| {
            (needs.dw && cert.w().closed_form_derivative(a).is_none())
                || (needs.dv && cert.v().is_some_and(|v| v.closed_form_derivative(a).is_none()))
        })
    };
    let steps = &cfg.dini_steps;
    let evals: Vec<Option<PointEval>> = items
        .par_iter()
        .map(|item| -> Result<Option<PointEval>> {
            match *item {
                Item::Sample(i) => {
                    let s = &samples[i];
                    let short = if needs_short(s) { Some(space.short_trajectory(s, h_max)?) } else { None };
                    space
                        .with_sample(s, |a| {
                            eval_point(space, cert, needs, a, short.as_ref().map(|t| (t, 0.0)), steps, None, format!("sample {i}"))
                        })
                        .map(Some)
                }
                Item::Knot(j, t) => {
                    let tr = &trajs[j];
                    tr.observe(t, |a| {
                        if space.has_domain() && !space.in_domain(a) {
                            return Ok(None);
                        }
                        eval_point(space, cert, needs, a, Some((tr, t)), steps, Some(t), format!("trajectory {j}"))
                            .map(Some)
                    })
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let evals: Vec<PointEval> = evals.into_iter().flatten().collect();
    let tol = cfg.tol;
    let a = cert.a();
    let mut conditions = Vec::new();

    if target == Target::Prop1 {
        let mut t = Tracker::new(ids::W_AT_ORIGIN, "W(0) = 0", tol);
        let w0 = space.with_zero(|z| cert.w().eval(z));
        let origin = space.with_zero(|z| space.point(z));
        t.push(w0.abs(), 0.0, &Witness { t: None, state: origin, source: "origin".into() });
        conditions.push(t.finish());
    }

    if matches!(target, Target::Thm2 | Target::Cor2) {
        let b = cert.b().expect("validated");
        let mut lo = Tracker::new(ids::SANDWICH_LOWER, format!("a(|h(x)|) <= V(x), a = {a}"), tol);
        let mut hi = Tracker::new(ids::SANDWICH_UPPER, format!("V(x) <= b(|x|), b = {b}"), tol);
        for p in &evals {
            let v = p.v.expect("validated");
            lo.push(a.value(p.out_norm), v, &p.witness);
            hi.push(v, b.value(p.state_norm), &p.witness);
        }
        conditions.push(lo.finish());
        conditions.push(hi.finish());
    }

    {
        let mut t = Tracker::new(ids::OUTPUT_BOUND, format!("a(|h(x)|) <= W(x), a = {a}"), tol);
        for p in &evals {
            t.push(a.value(p.out_norm), p.w, &p.witness);
        }
        conditions.push(t.finish());
    }

    if let Some(rho) = cert.rho().filter(|_| target != Target::Prop1) {
        let mut t = Tracker::new(ids::DISSIPATION, format!("D+V(x) <= -rho(W(x)), rho = {rho}"), tol);
        for p in &evals {
            if let Some(dv) = p.dv {
                t.push(dv, -rho.value(p.w), &p.witness);
            }
        }
        conditions.push(t.finish());
    }

    match target {
        Target::Thm1 | Target::Cor1 | Target::Prop1 => {
            let mut t = Tracker::new(ids::W_NONINCREASING, "D+W(x) <= 0", tol);
            for p in &evals {
                if let Some((hi, _)) = p.dw {
                    t.push(hi, 0.0, &p.witness);
                }
            }
            conditions.push(t.finish());
            conditions.push(w_pairs(space, cert, trajs, tol));
        }
        Target::Thm2 | Target::Cor2 => {
            let gamma = cert.gamma().expect("validated");
            match cert.side().expect("validated") {
                Side::Upper => {
                    let mut t = Tracker::new(ids::W_RATE_UPPER, format!("D+W(x) <= gamma(V(x)), gamma = {gamma}"), tol);
                    for p in &evals {
                        if let (Some((hi, _)), Some(v)) = (p.dw, p.v) {
                            t.push(hi, gamma.value(v), &p.witness);
                        }
                    }
                    conditions.push(t.finish());
                }
                Side::Lower => {
                    let mut t =
                        Tracker::new(ids::W_RATE_LOWER, format!("D+W(x) >= -gamma(V(x)), gamma = {gamma}"), tol);
                    for p in &evals {
                        if let (Some((_, lo)), Some(v)) = (p.dw, p.v) {
                            t.push(-gamma.value(v), lo, &p.witness);
                        }
                    }
                    conditions.push(t.finish());
                }
            }
            if let Some(zeta) = cert.zeta() {
                let mut t = Tracker::new(ids::W_BY_V, format!("W(x) <= zeta(V(x)), zeta = {zeta}"), tol);
                for p in &evals {
                    t.push(p.w, zeta.value(p.v.expect("validated")), &p.witness);
                }
                conditions.push(t.finish());
            }
        }
    }

    if target == Target::Prop1 {
        let b = cert.b().expect("validated");
        let mut t = Tracker::new(ids::OUTPUT_ENVELOPE, format!("a(|y(t)|) <= b(|x0|), b = {b}"), tol);
        for (j, tr) in trajs.iter().enumerate() {
            let bound = b.value(space.initial_norm(tr));
            for (i, y) in tr.outputs().iter().enumerate() {
                let w = Witness { t: Some(tr.times()[i]), state: tr.states()[i].clone(), source: format!("trajectory {j}") };
                t.push(a.value(euclid(y)), bound, &w);
            }
        }
        conditions.push(t.finish());
    }

    let shells = shell_sups(&evals, cfg.radius, target == Target::Prop1);
    {
        let mut t = Tracker::new(ids::SUP_BOUNDED, "sampled sup of V + W per radius shell is finite", tol);
        let w = Witness { t: None, state: Vec::new(), source: "shells".into() };
        for s in &shells {
            t.push(if s.sup.is_finite() { 0.0 } else { f64::INFINITY }, 0.0, &w);
        }
        conditions.push(t.finish());
    }

    let overall = if conditions.iter().all(|c| c.verdict.is_pass()) { Verdict::Pass } else { Verdict::Fail };
    Ok(CheckReport {
        system: space.name().to_string(),
        certificate: cert.describe(),
        config: cfg.clone(),
        trajectories: trajs.len(),
        conditions,
        shells,
        overall,
    })
}

/// `W(φ(t₂)) ≤ W(φ(t₁))` for all knot pairs, via the running minimum.
fn w_pairs<S: Space>(space: &S, cert: &Certificate<S::Arg>, trajs: &[Trajectory], tol: Tolerance) -> ConditionReport
where
    Trajectory: Observe<S::Arg>,
{
    let per_traj: Vec<Vec<(f64, f64, f64, Vec<f64>)>> = trajs
        .par_iter()
        .map(|tr| {
            let mut out = Vec::with_capacity(tr.len());
            let mut run_min = f64::INFINITY;
            for (i, &t) in tr.times().iter().enumerate() {
                let (inside, w) = tr.observe(t, |a| (!space.has_domain() || space.in_domain(a), cert.w().eval(a)));
                if !inside {
                    continue;
                }
                if run_min.is_finite() {
                    out.push((t, w, run_min, tr.states()[i].clone()));
                }
                run_min = run_min.min(w);
            }
            out
        })
        .collect();
    let mut t = Tracker::new(ids::W_PAIRS, "W(phi(t2)) <= W(phi(t1)) for knots t1 <= t2", tol);
    for (j, rows) in per_traj.into_iter().enumerate() {
        let source = format!("trajectory {j}");
        for (time, w, run_min, state) in rows {
            t.push(w, run_min, &Witness { t: Some(time), state, source: source.clone() });
        }
    }
    t.finish()
}

fn shell_sups(evals: &[PointEval], radius: f64, w_only: bool) -> Vec<ShellSup> {
    (1..=4)
        .map(|k| {
            let s = radius * k as f64 / 4.0;
            let mut sup = 0.0f64;
            let mut n = 0;
            for p in evals.iter().filter(|p| p.witness.t.is_none() && p.state_norm <= s) {
                let val = if w_only { p.w } else { p.w + p.v.unwrap_or(0.0) };
                sup = if val.is_nan() { f64::INFINITY } else { sup.max(val) };
                n += 1;
            }
            ShellSup { radius: s, sup, samples: n }
        })
        .collect()
}

/// Uniform-result hypotheses for an ODE: output bound, dissipation, `W` non-increasing.
pub fn check_thm1(
    sys: &OdeSystem,
    cert: &Certificate<[f64]>,
    cfg: &CheckConfig,
    trajs: &[Trajectory],
) -> Result<CheckReport> {
    run(&OdeSpace(sys), cert, &[Target::Thm1], cfg, trajs)
}

/// Non-uniform hypotheses for an ODE: sandwich bounds, dissipation, output
/// bound, one-sided rate bound on `W`, and `W ≤ ζ(V)` when `ρ` is not monotone.
pub fn check_thm2(
    sys: &OdeSystem,
    cert: &Certificate<[f64]>,
    cfg: &CheckConfig,
    trajs: &[Trajectory],
) -> Result<CheckReport> {
    run(&OdeSpace(sys), cert, &[Target::Thm2], cfg, trajs)
}

/// Output bound, `W` non-increasing, and the implied envelope `a(|y(t)|) ≤ b(|x₀|)`.
pub fn check_prop1(
    sys: &OdeSystem,
    cert: &Certificate<[f64]>,
    cfg: &CheckConfig,
    trajs: &[Trajectory],
) -> Result<CheckReport> {
    run(&OdeSpace(sys), cert, &[Target::Prop1], cfg, trajs)
}

/// Delay-system form of [`check_thm1`] (Dini derivatives of functionals of `x_t`).
pub fn check_cor1(
    sys: &DelaySystem,
    cert: &Certificate<dyn HistoryQuery>,
    cfg: &CheckConfig,
    trajs: &[Trajectory],
) -> Result<CheckReport> {
    run(&DelaySpace(sys), cert, &[Target::Cor1], cfg, trajs)
}

/// Delay-system form of [`check_thm2`].
pub fn check_cor2(
    sys: &DelaySystem,
    cert: &Certificate<dyn HistoryQuery>,
    cfg: &CheckConfig,
    trajs: &[Trajectory],
) -> Result<CheckReport> {
    run(&DelaySpace(sys), cert, &[Target::Cor2], cfg, trajs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificates::{CertificateParts, ComparisonFn};

    fn decay() -> OdeSystem {
        OdeSystem::new("decay", 1, 1, |x| vec![-x[0]], |x| vec![x[0]])
    }

    fn half_square() -> ScalarField<[f64]> {
        ScalarField::new("y^2/2", |x: &[f64]| 0.5 * x[0] * x[0])
    }

    fn thm1_cert() -> Certificate<[f64]> {
        Certificate::new(
            "decay-thm1",
            Target::Thm1,
            CertificateParts {
                v: Some(half_square()),
                w: Some(half_square()),
                rho: Some(ComparisonFn::Linear { c: 2.0 }),
                a: Some(ComparisonFn::Quadratic { c: 0.5 }),
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn decay_passes_thm1() {
        let sys = decay();
        let trajs: Vec<_> = [1.0, -0.5]
            .iter()
            .map(|&y| integrate_ode(&sys, &[y], &IntegratorConfig::default().with_t_final(5.0)).unwrap())
            .collect();
        // forward differences carry an O(h) bias, absorbed by the tolerance
        let rep = check_thm1(&sys, &thm1_cert(), &CheckConfig::default(), &trajs).unwrap();
        assert!(rep.passed(), "{rep:#?}");
        // with closed-form derivatives every inequality is tight or slack
        let rep = check_thm1(&sys, &crate::certificates::presets::decoupled_thm1(), &CheckConfig::default(), &trajs).unwrap();
        assert!(rep.passed());
        assert!(rep.min_margin() >= -1e-9, "{rep:#?}");
    }

    #[test]
    fn mistargeted_certificate_is_rejected() {
        let sys = decay();
        assert!(matches!(
            check_thm2(&sys, &thm1_cert(), &CheckConfig::default(), &[]),
            Err(Error::Certificate(_))
        ));
    }

    #[test]
    fn growing_w_fails_pairs() {
        let sys = OdeSystem::new("grow", 1, 1, |x| vec![x[0]], |x| vec![x[0]]);
        let tr = integrate_ode(&sys, &[0.1], &IntegratorConfig::default().with_t_final(1.0)).unwrap();
        let cfg = CheckConfig { samples: 0, ..Default::default() };
        let rep = check_thm1(&sys, &thm1_cert(), &cfg, &[tr]).unwrap();
        assert!(!rep.passed());
        let pairs = rep.condition(ids::W_PAIRS).unwrap();
        assert_eq!(pairs.verdict, Verdict::Fail);
        assert!(pairs.margin < 0.0);
    }

    #[test]
    fn knot_subset_covers_ends() {
        let idx = knot_subset(1000, 10);
        assert_eq!(idx.first(), Some(&0));
        assert_eq!(idx.last(), Some(&999));
        assert_eq!(knot_subset(5, 10), vec![0, 1, 2, 3, 4]);
    }
}
