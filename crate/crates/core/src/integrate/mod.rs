//! Numerical integration producing densely-queryable trajectories.
//!
//! ODEs use an embedded Dormand–Prince 5(4) pair with PI step control. When
//! the stiffness detector fires (or the explicit step collapses) the solver
//! switches for the rest of the run to a two-stage L-stable Rosenbrock method.
//! Delay systems use the method of steps with fixed-step classical RK4.

mod dde;
mod ode;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite;
use crate::systems::{euclid, DelayField, History, HistoryQuery, StateVec, VectorField};

pub use dde::integrate_dde;
pub use ode::integrate_ode;

/// Abort threshold on `|x|`.
pub const BLOW_UP_NORM: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub t_final: f64,
    /// Fixed step for delay systems; must divide the delay horizon.
    pub dde_step: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-8, abs_tol: 1e-10, max_step: f64::INFINITY, t_final: 10.0, dde_step: 0.01 }
    }
}

impl IntegratorConfig {
    pub fn with_t_final(mut self, t_final: f64) -> Self {
        self.t_final = t_final;
        self
    }

    pub fn with_dde_step(mut self, step: f64) -> Self {
        self.dde_step = step;
        self
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be > 0".into()));
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(Error::InvalidConfig(format!("t_final must be finite and > 0, got {}", self.t_final)));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidConfig("max_step must be > 0".into()));
        }
        if !(self.dde_step > 0.0) || !self.dde_step.is_finite() {
            return Err(Error::InvalidConfig("dde_step must be > 0".into()));
        }
        Ok(())
    }

    /// Number of fixed steps per delay horizon `r`.
    pub(crate) fn steps_per_delay(&self, r: f64) -> Result<usize> {
        let m = r / self.dde_step;
        let rounded = m.round();
        if rounded < 1.0 || (m - rounded).abs() > 1e-9 * m.max(1.0) {
            return Err(Error::InvalidConfig(format!(
                "dde_step {} must divide the delay horizon {r} (and be ≤ r)",
                self.dde_step
            )));
        }
        Ok(rounded as usize)
    }
}

/// Which method produced a stretch of the solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    DormandPrince,
    Rosenbrock,
    MethodOfStepsRk4,
}

#[derive(Clone)]
enum OutputMap {
    Ode(VectorField),
    Delay(DelayField),
}

/// Knot data of a solution plus, for delay systems, the initial history.
#[derive(Debug, Clone)]
pub(crate) struct Dense {
    pub(crate) times: Vec<f64>,
    pub(crate) states: Vec<Vec<f64>>,
    pub(crate) slopes: Vec<Vec<f64>>,
    pub(crate) pre: Option<History>,
}

impl Dense {
    pub(crate) fn new(pre: Option<History>) -> Self {
        Self { times: Vec::new(), states: Vec::new(), slopes: Vec::new(), pre }
    }

    pub(crate) fn push_knot(&mut self, t: f64, x: Vec<f64>, dx: Vec<f64>) {
        self.times.push(t);
        self.states.push(x);
        self.slopes.push(dx);
    }

    fn dim(&self) -> usize {
        self.states[0].len()
    }

    /// Interpolation for `t` within `[0, t_last]` (knots are returned verbatim).
    pub(crate) fn eval_into(&self, t: f64, out: &mut Vec<f64>) {
        out.clear();
        if self.times.len() == 1 {
            out.extend_from_slice(&self.states[0]);
            return;
        }
        let i = hermite::segment(&self.times, t);
        if t == self.times[i] {
            out.extend_from_slice(&self.states[i]);
            return;
        }
        if t == self.times[i + 1] {
            out.extend_from_slice(&self.states[i + 1]);
            return;
        }
        hermite::eval_into(
            self.times[i],
            self.times[i + 1],
            &self.states[i],
            &self.states[i + 1],
            &self.slopes[i],
            &self.slopes[i + 1],
            t,
            out,
        );
    }

    /// Value at `τ ∈ [−r, t_last]`, reading the initial history for `τ < 0`.
    pub(crate) fn extended_into(&self, tau: f64, out: &mut Vec<f64>) {
        match &self.pre {
            Some(pre) if tau < 0.0 => pre.at_into(tau, out),
            _ => self.eval_into(tau.max(0.0), out),
        }
    }

    /// `∫_{-r}^0 f(s, x(t + s)) ds`, piece by piece over the initial history
    /// and the solution.
    pub(crate) fn integrate_window(&self, t: f64, r: f64, f: &mut dyn FnMut(f64, &[f64]) -> f64) -> f64 {
        let lo = t - r;
        let mut g = |tau: f64, x: &[f64]| f(tau - t, x);
        let mut total = 0.0;
        if lo < 0.0 {
            let hi = t.min(0.0);
            match &self.pre {
                Some(pre) => {
                    total += hermite::integrate_pieces(pre.knots(), pre.values(), pre.slopes(), lo, hi, &mut g)
                }
                None => {
                    let x0 = &self.states[0];
                    total += hermite::gauss_legendre(lo, hi, |tau| g(tau, x0));
                }
            }
        }
        if self.times.len() >= 2 && t > lo.max(0.0) {
            total += hermite::integrate_pieces(&self.times, &self.states, &self.slopes, lo.max(0.0), t, &mut g);
        }
        total
    }

    /// Breakpoints of `s ↦ x(t + s)` on `[−r, 0]` from the initial-history
    /// knots and the solution knots strictly before `t`.
    pub(crate) fn breakpoints(&self, t: f64, r: f64) -> Vec<f64> {
        let lo = t - r;
        let mut bp = vec![-r];
        if let Some(pre) = &self.pre {
            bp.extend(pre.knots().iter().filter(|&&k| k > lo && k < 0.0 && k < t).map(|&k| k - t));
        }
        let start = self.times.partition_point(|&k| k <= lo);
        let end = self.times.partition_point(|&k| k < t);
        bp.extend(self.times[start..end].iter().map(|&k| k - t));
        bp.push(0.0);
        bp.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * r);
        if let Some(first) = bp.first_mut() {
            *first = -r;
        }
        if let Some(last) = bp.last_mut() {
            *last = 0.0;
        }
        bp
    }
}

/// A numerical solution on `[0, t_f]` with exact values at knots and
/// cubic-Hermite interpolation in between. Cheap to clone.
#[derive(Clone)]
pub struct Trajectory {
    system: String,
    dense: Arc<Dense>,
    outputs: Vec<Vec<f64>>,
    output: OutputMap,
    domain_exits: Vec<f64>,
    stiff_switch: Option<f64>,
}

impl fmt::Debug for Trajectory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Trajectory")
            .field("system", &self.system)
            .field("knots", &self.len())
            .field("t_final", &self.t_final())
            .field("delay", &self.delay())
            .field("domain_exits", &self.domain_exits.len())
            .field("stiff_switch", &self.stiff_switch)
            .finish()
    }
}

impl Trajectory {
    pub(crate) fn from_ode(
        system: &str,
        dense: Dense,
        output: VectorField,
        domain_exits: Vec<f64>,
        stiff_switch: Option<f64>,
    ) -> Self {
        let outputs = dense.states.iter().map(|x| output(x)).collect();
        Self {
            system: system.to_string(),
            dense: Arc::new(dense),
            outputs,
            output: OutputMap::Ode(output),
            domain_exits,
            stiff_switch,
        }
    }

    pub(crate) fn from_dde(system: &str, dense: Dense, output: DelayField, domain_exits: Vec<f64>) -> Self {
        let dense = Arc::new(dense);
        let r = dense.pre.as_ref().expect("delay trajectory has a history").horizon();
        let outputs = dense
            .times
            .iter()
            .map(|&t| output(&HistoryWindow { dense: dense.clone(), t, r }))
            .collect();
        Self {
            system: system.to_string(),
            dense,
            outputs,
            output: OutputMap::Delay(output),
            domain_exits,
            stiff_switch: None,
        }
    }

    pub fn system(&self) -> &str {
        &self.system
    }

    pub fn times(&self) -> &[f64] {
        &self.dense.times
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.dense.states
    }

    /// `ẋ` at each knot (the vector field evaluated there).
    pub fn slopes(&self) -> &[Vec<f64>] {
        &self.dense.slopes
    }

    pub fn outputs(&self) -> &[Vec<f64>] {
        &self.outputs
    }

    pub fn len(&self) -> usize {
        self.dense.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dense.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dense.dim()
    }

    pub fn output_dim(&self) -> usize {
        self.outputs[0].len()
    }

    pub fn t_final(&self) -> f64 {
        *self.dense.times.last().expect("trajectory has at least one knot")
    }

    /// Delay horizon for delay-system trajectories.
    pub fn delay(&self) -> Option<f64> {
        self.dense.pre.as_ref().map(|h| h.horizon())
    }

    pub fn initial_history(&self) -> Option<&History> {
        self.dense.pre.as_ref()
    }

    /// Knot times at which the state (or segment) was outside Ω.
    pub fn domain_exits(&self) -> &[f64] {
        &self.domain_exits
    }

    /// Time at which the ODE solver switched to the stiff method, if it did.
    pub fn stiff_switch(&self) -> Option<f64> {
        self.stiff_switch
    }

    fn check_range(&self, t: f64) -> Result<()> {
        let tf = self.t_final();
        if !(t >= 0.0 && t <= tf) {
            return Err(Error::OutOfRange { t, t_final: tf });
        }
        Ok(())
    }

    /// Interpolated state at `t ∈ [0, t_f]`; exact at knots.
    pub fn dense_eval(&self, t: f64) -> Result<StateVec> {
        self.check_range(t)?;
        let mut out = Vec::with_capacity(self.dim());
        self.dense.eval_into(t, &mut out);
        StateVec::new(out)
    }

    /// Time derivative of the interpolant at `t`.
    pub fn dense_derivative(&self, t: f64) -> Result<Vec<f64>> {
        self.check_range(t)?;
        let d = &self.dense;
        if d.times.len() == 1 {
            return Ok(d.slopes[0].clone());
        }
        let i = hermite::segment(&d.times, t);
        if t == d.times[i] {
            return Ok(d.slopes[i].clone());
        }
        Ok((0..self.dim())
            .map(|c| {
                hermite::derivative(
                    d.times[i],
                    d.times[i + 1],
                    d.states[i][c],
                    d.states[i + 1][c],
                    d.slopes[i][c],
                    d.slopes[i + 1][c],
                    t,
                )
            })
            .collect())
    }

    pub(crate) fn eval_into(&self, t: f64, out: &mut Vec<f64>) {
        self.dense.eval_into(t, out)
    }

    /// Output `y(t)` at any `t ∈ [0, t_f]`.
    pub fn output_at(&self, t: f64) -> Result<Vec<f64>> {
        self.check_range(t)?;
        match &self.output {
            OutputMap::Ode(output) => {
                let mut x = Vec::with_capacity(self.dim());
                self.dense.eval_into(t, &mut x);
                Ok(output(&x))
            }
            OutputMap::Delay(output) => Ok(output(&self.window(t))),
        }
    }

    /// `|y(t)|` at each knot.
    pub fn output_norms(&self) -> Vec<f64> {
        self.outputs.iter().map(|y| euclid(y)).collect()
    }

    /// The state segment `x_t` as a queryable history (delay trajectories only).
    pub fn history_at(&self, t: f64) -> Result<HistoryWindow> {
        if self.delay().is_none() {
            return Err(Error::InvalidConfig("history_at needs a delay-system trajectory".into()));
        }
        self.check_range(t)?;
        Ok(self.window(t))
    }

    pub(crate) fn window(&self, t: f64) -> HistoryWindow {
        let r = self.delay().expect("delay trajectory");
        HistoryWindow { dense: self.dense.clone(), t, r }
    }
}

/// `x_t(s) = x(t + s)` for `s ∈ [−r, 0]`, backed by a delay trajectory.
#[derive(Clone)]
pub struct HistoryWindow {
    dense: Arc<Dense>,
    t: f64,
    r: f64,
}

impl HistoryWindow {
    pub fn time(&self) -> f64 {
        self.t
    }
}

impl HistoryQuery for HistoryWindow {
    fn horizon(&self) -> f64 {
        self.r
    }

    fn dim(&self) -> usize {
        self.dense.dim()
    }

    fn at_into(&self, s: f64, out: &mut Vec<f64>) {
        let s = s.clamp(-self.r, 0.0);
        self.dense.extended_into(self.t + s, out);
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.dense.breakpoints(self.t, self.r)
    }

    fn integrate(&self, f: &mut dyn FnMut(f64, &[f64]) -> f64) -> f64 {
        self.dense.integrate_window(self.t, self.r, f)
    }
}

/// Borrowing window used while a delay solution is still being built.
pub(crate) struct DenseWindow<'a> {
    pub(crate) dense: &'a Dense,
    pub(crate) t: f64,
    pub(crate) r: f64,
}

impl HistoryQuery for DenseWindow<'_> {
    fn horizon(&self) -> f64 {
        self.r
    }

    fn dim(&self) -> usize {
        self.dense.dim()
    }

    fn at_into(&self, s: f64, out: &mut Vec<f64>) {
        let s = s.clamp(-self.r, 0.0);
        self.dense.extended_into(self.t + s, out);
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.dense.breakpoints(self.t, self.r)
    }

    fn integrate(&self, f: &mut dyn FnMut(f64, &[f64]) -> f64) -> f64 {
        self.dense.integrate_window(self.t, self.r, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dde_step_must_divide_delay() {
        let cfg = IntegratorConfig::default().with_dde_step(0.3);
        assert!(cfg.steps_per_delay(1.0).is_err());
        assert_eq!(IntegratorConfig::default().with_dde_step(0.25).steps_per_delay(1.0).unwrap(), 4);
        assert!(IntegratorConfig::default().with_dde_step(2.0).steps_per_delay(1.0).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(IntegratorConfig::default().validate().is_ok());
        assert!(IntegratorConfig::default().with_t_final(0.0).validate().is_err());
        assert!(IntegratorConfig::default().with_tolerances(0.0, 1.0).validate().is_err());
    }
}
