//! Lyapunov-type certificates and sampling-based checks of their hypotheses.
//!
//! A [`Certificate`] bundles the scalar fields `V`, `W` with comparison
//! functions `ρ, a, b, γ, ζ`. The `check_*` functions evaluate each required
//! inequality at sampled states of `B_R ∩ Ω` and along supplied trajectories
//! and report the worst signed margin per condition.

mod check;
mod dini;
pub mod presets;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use check::{
    check_cor1, check_cor2, check_prop1, check_thm1, check_thm2, CheckConfig, CheckReport, ConditionReport,
    ShellSup, Verdict,
};
pub use dini::{dini_derivative, Observe, DEFAULT_DINI_STEPS};

/// Condition identifiers used in reports.
pub mod ids {
    /// `a(|h(x)|) ≤ W(x)`
    pub const OUTPUT_BOUND: &str = "output-bound";
    /// `D⁺V(x) ≤ −ρ(W(x))`
    pub const DISSIPATION: &str = "dissipation";
    /// `D⁺W(x) ≤ 0`
    pub const W_NONINCREASING: &str = "w-nonincreasing";
    /// `W(φ(t₂)) ≤ W(φ(t₁))` for knot pairs `t₁ ≤ t₂`
    pub const W_PAIRS: &str = "w-pairs";
    /// `a(|h(x)|) ≤ V(x)`
    pub const SANDWICH_LOWER: &str = "sandwich-lower";
    /// `V(x) ≤ b(|x|)`
    pub const SANDWICH_UPPER: &str = "sandwich-upper";
    /// `D⁺W(x) ≤ γ(V(x))`
    pub const W_RATE_UPPER: &str = "w-rate-upper";
    /// `D⁺W(x) ≥ −γ(V(x))`
    pub const W_RATE_LOWER: &str = "w-rate-lower";
    /// `W(x) ≤ ζ(V(x))`
    pub const W_BY_V: &str = "w-by-v";
    /// `a(|y(t, x₀)|) ≤ b(|x₀|)`
    pub const OUTPUT_ENVELOPE: &str = "output-envelope";
    /// `W(0) = 0`
    pub const W_AT_ORIGIN: &str = "w-at-origin";
    /// sampled `sup{V + W : |x| ≤ s}` finite per radius shell
    pub const SUP_BOUNDED: &str = "sup-bounded";
}

/// Comparison functions (classes K, K∞, positive definite, constants).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ComparisonFn {
    /// `c·s`
    Linear { c: f64 },
    /// `c·s²`
    Quadratic { c: f64 },
    /// `c·s^p`
    Power { c: f64, p: f64 },
    /// `min(c·s, cap)`
    Capped { c: f64, cap: f64 },
    /// `c·s / (1 + s²)`: positive definite but not monotone
    Bump { c: f64 },
    /// `≡ c`
    Constant { c: f64 },
}

impl ComparisonFn {
    #[inline]
    pub fn value(&self, s: f64) -> f64 {
        match *self {
            ComparisonFn::Linear { c } => c * s,
            ComparisonFn::Quadratic { c } => c * s * s,
            ComparisonFn::Power { c, p } => c * s.powf(p),
            ComparisonFn::Capped { c, cap } => (c * s).min(cap),
            ComparisonFn::Bump { c } => c * s / (1.0 + s * s),
            ComparisonFn::Constant { c } => c,
        }
    }

    /// Non-decreasing on `[0, ∞)`, decided from the closed form.
    pub fn is_non_decreasing(&self) -> bool {
        match *self {
            ComparisonFn::Linear { c } | ComparisonFn::Quadratic { c } | ComparisonFn::Constant { c } => c >= 0.0,
            ComparisonFn::Power { c, p } => c >= 0.0 && p >= 0.0,
            ComparisonFn::Capped { c, .. } => c >= 0.0,
            ComparisonFn::Bump { c } => c == 0.0,
        }
    }

    /// Geometric test grid `1e-6 … 1e6`.
    pub fn test_grid() -> impl Iterator<Item = f64> {
        (-60..=60).map(|k| 10f64.powf(k as f64 / 10.0))
    }

    /// `value(0) = 0`, strictly increasing and positive on the test grid.
    pub fn check_class_k(&self) -> Result<()> {
        if self.value(0.0) != 0.0 {
            return Err(Error::Certificate(format!("{self} is not zero at zero")));
        }
        let mut prev = 0.0;
        for s in Self::test_grid() {
            let v = self.value(s);
            if !(v > prev) || !v.is_finite() {
                return Err(Error::Certificate(format!("{self} is not strictly increasing at s = {s:e}")));
            }
            prev = v;
        }
        Ok(())
    }

    /// Class K plus unboundedness (decided from the closed form).
    pub fn check_class_k_inf(&self) -> Result<()> {
        self.check_class_k()?;
        if matches!(self, ComparisonFn::Capped { .. }) {
            return Err(Error::Certificate(format!("{self} is bounded, not of class K-infinity")));
        }
        Ok(())
    }

    /// `value(0) = 0` and `value(s) > 0` on the test grid.
    pub fn check_positive_definite(&self) -> Result<()> {
        if self.value(0.0) != 0.0 {
            return Err(Error::Certificate(format!("{self} is not zero at zero")));
        }
        if let Some(s) = Self::test_grid().find(|&s| !(self.value(s) > 0.0)) {
            return Err(Error::Certificate(format!("{self} is not positive at s = {s:e}")));
        }
        Ok(())
    }

    /// Continuous and nonnegative on the test grid (and at 0).
    pub fn check_nonnegative(&self) -> Result<()> {
        if let Some(s) = std::iter::once(0.0).chain(Self::test_grid()).find(|&s| !(self.value(s) >= 0.0)) {
            return Err(Error::Certificate(format!("{self} is negative at s = {s:e}")));
        }
        Ok(())
    }
}

impl fmt::Display for ComparisonFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ComparisonFn::Linear { c } => write!(f, "{c}·s"),
            ComparisonFn::Quadratic { c } => write!(f, "{c}·s²"),
            ComparisonFn::Power { c, p } => write!(f, "{c}·s^{p}"),
            ComparisonFn::Capped { c, cap } => write!(f, "min({c}·s, {cap})"),
            ComparisonFn::Bump { c } => write!(f, "{c}·s/(1+s²)"),
            ComparisonFn::Constant { c } => write!(f, "≡{c}"),
        }
    }
}

/// `s ≥ 0` with `a(s) = v`, by bisection after geometric bracket growth.
pub fn inverse_comparison(a: &ComparisonFn, v: f64) -> Result<f64> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::InvalidConfig(format!("inverse_comparison needs v ≥ 0, got {v}")));
    }
    if v == 0.0 {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while a.value(hi) < v {
        hi *= 2.0;
        if hi > 1e18 {
            return Err(Error::BracketNotFound { value: v });
        }
    }
    let mut lo = 0.0;
    let tol = 1e-12 * v.max(1.0);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let fm = a.value(mid);
        if (fm - v).abs() <= tol && (hi - lo) <= 1e-15 * hi.max(1.0) {
            return Ok(mid);
        }
        if fm < v {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

type Eval<A> = Arc<dyn Fn(&A) -> f64 + Send + Sync>;

/// A nonnegative functional with an optional closed-form derivative along a bound system.
pub struct ScalarField<A: ?Sized> {
    name: String,
    eval: Eval<A>,
    derivative: Option<Eval<A>>,
}

impl<A: ?Sized> Clone for ScalarField<A> {
    fn clone(&self) -> Self {
        Self { name: self.name.clone(), eval: self.eval.clone(), derivative: self.derivative.clone() }
    }
}

impl<A: ?Sized> fmt::Debug for ScalarField<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("name", &self.name)
            .field("closed_form_derivative", &self.derivative.is_some())
            .finish()
    }
}

impl<A: ?Sized> ScalarField<A> {
    pub fn new(name: impl Into<String>, eval: impl Fn(&A) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), eval: Arc::new(eval), derivative: None }
    }

    /// Attaches `x ↦ ∇F(x)·f(x)` for the system this field will be checked against.
    pub fn with_derivative(mut self, d: impl Fn(&A) -> f64 + Send + Sync + 'static) -> Self {
        self.derivative = Some(Arc::new(d));
        self
    }

    /// Drops the closed-form derivative so checks fall back to Dini estimates.
    pub fn without_derivative(mut self) -> Self {
        self.derivative = None;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn eval(&self, x: &A) -> f64 {
        (self.eval)(x)
    }

    pub fn closed_form_derivative(&self, x: &A) -> Option<f64> {
        self.derivative.as_ref().map(|d| d(x))
    }

    pub fn has_derivative(&self) -> bool {
        self.derivative.is_some()
    }
}

/// Which theorem's hypothesis set a certificate targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// uniform result for ODEs (`V, W, ρ, a`; `W` non-increasing)
    Thm1,
    /// non-uniform result for ODEs (adds `b, γ`, and `ζ` unless `ρ` is monotone)
    Thm2,
    /// Lagrange / Lyapunov output stability (`W, a, b`)
    Prop1,
    /// delay-system form of `Thm1`
    Cor1,
    /// delay-system form of `Thm2`
    Cor2,
}

impl Target {
    pub fn is_delay(&self) -> bool {
        matches!(self, Target::Cor1 | Target::Cor2)
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Target::Thm1 => "thm1",
            Target::Thm2 => "thm2",
            Target::Prop1 => "prop1",
            Target::Cor1 => "cor1",
            Target::Cor2 => "cor2",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Target {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "thm1" => Ok(Target::Thm1),
            "thm2" => Ok(Target::Thm2),
            "prop1" => Ok(Target::Prop1),
            "cor1" => Ok(Target::Cor1),
            "cor2" => Ok(Target::Cor2),
            _ => Err(Error::InvalidConfig(format!("unknown target `{s}`"))),
        }
    }
}

/// Which one-sided rate bound on `W` a non-uniform certificate asserts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `D⁺W ≤ γ(V)`
    Upper,
    /// `D⁺W ≥ −γ(V)`
    Lower,
}

/// Optional ingredients; which are required depends on the [`Target`].
pub struct CertificateParts<A: ?Sized> {
    pub v: Option<ScalarField<A>>,
    pub w: Option<ScalarField<A>>,
    pub rho: Option<ComparisonFn>,
    pub a: Option<ComparisonFn>,
    pub b: Option<ComparisonFn>,
    pub gamma: Option<ComparisonFn>,
    pub zeta: Option<ComparisonFn>,
    pub side: Option<Side>,
}

impl<A: ?Sized> Default for CertificateParts<A> {
    fn default() -> Self {
        Self { v: None, w: None, rho: None, a: None, b: None, gamma: None, zeta: None, side: None }
    }
}

/// A validated certificate. `A` is `[f64]` for ODE targets and
/// `dyn HistoryQuery` for delay targets.
pub struct Certificate<A: ?Sized> {
    name: String,
    target: Target,
    v: Option<ScalarField<A>>,
    w: ScalarField<A>,
    rho: Option<ComparisonFn>,
    a: ComparisonFn,
    b: Option<ComparisonFn>,
    gamma: Option<ComparisonFn>,
    zeta: Option<ComparisonFn>,
    side: Option<Side>,
}

impl<A: ?Sized> Clone for Certificate<A> {
    fn clone(&self) -> Self {
        Self {
            name: self.name.clone(),
            target: self.target,
            v: self.v.clone(),
            w: self.w.clone(),
            rho: self.rho,
            a: self.a,
            b: self.b,
            gamma: self.gamma,
            zeta: self.zeta,
            side: self.side,
        }
    }
}

impl<A: ?Sized> fmt::Debug for Certificate<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Certificate")
            .field("name", &self.name)
            .field("target", &self.target)
            .field("v", &self.v)
            .field("w", &self.w)
            .field("rho", &self.rho)
            .field("a", &self.a)
            .field("b", &self.b)
            .field("gamma", &self.gamma)
            .field("zeta", &self.zeta)
            .field("side", &self.side)
            .finish()
    }
}

fn require<T>(field: Option<T>, what: &str, target: Target) -> Result<T> {
    field.ok_or_else(|| Error::Certificate(format!("target {target} requires {what}")))
}

impl<A: ?Sized> Certificate<A> {
    /// Validates that every ingredient required by `target` is present and
    /// that comparison functions belong to their classes on the test grid.
    pub fn new(name: impl Into<String>, target: Target, parts: CertificateParts<A>) -> Result<Self> {
        let CertificateParts { v, w, rho, a, b, gamma, zeta, side } = parts;
        let w = require(w, "W", target)?;
        let a = require(a, "a", target)?;
        a.check_class_k_inf()?;
        let mut cert = Self { name: name.into(), target, v, w, rho, a, b, gamma, zeta, side };
        match target {
            Target::Thm1 | Target::Cor1 => {
                require(cert.v.as_ref(), "V", target)?;
                require(cert.rho, "rho", target)?.check_positive_definite()?;
            }
            Target::Thm2 | Target::Cor2 => {
                require(cert.v.as_ref(), "V", target)?;
                let rho = require(cert.rho, "rho", target)?;
                rho.check_positive_definite()?;
                require(cert.b, "b", target)?.check_class_k_inf()?;
                require(cert.gamma, "gamma", target)?.check_nonnegative()?;
                require(cert.side, "side (upper or lower rate bound on W)", target)?;
                if !rho.is_non_decreasing() {
                    require(cert.zeta, "zeta (rho is not monotone)", target)?.check_nonnegative()?;
                }
            }
            Target::Prop1 => {
                require(cert.b, "b", target)?.check_class_k_inf()?;
            }
        }
        if !matches!(target, Target::Thm2 | Target::Cor2) {
            cert.side = None;
        }
        Ok(cert)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn target(&self) -> Target {
        self.target
    }

    pub fn v(&self) -> Option<&ScalarField<A>> {
        self.v.as_ref()
    }

    pub fn w(&self) -> &ScalarField<A> {
        &self.w
    }

    pub fn rho(&self) -> Option<ComparisonFn> {
        self.rho
    }

    pub fn a(&self) -> ComparisonFn {
        self.a
    }

    pub fn b(&self) -> Option<ComparisonFn> {
        self.b
    }

    pub fn gamma(&self) -> Option<ComparisonFn> {
        self.gamma
    }

    pub fn zeta(&self) -> Option<ComparisonFn> {
        self.zeta
    }

    pub fn side(&self) -> Option<Side> {
        self.side
    }

    /// Same certificate aimed at another target (revalidated).
    pub fn retarget(&self, target: Target) -> Result<Self> {
        Certificate::new(
            self.name.clone(),
            target,
            CertificateParts {
                v: self.v.clone(),
                w: Some(self.w.clone()),
                rho: self.rho,
                a: Some(self.a),
                b: self.b,
                gamma: self.gamma,
                zeta: self.zeta,
                side: self.side,
            },
        )
    }

    /// Replaces `γ` (revalidated).
    pub fn with_gamma(&self, gamma: ComparisonFn) -> Result<Self> {
        let mut c = self.clone();
        c.gamma = Some(gamma);
        c.retarget(self.target)
    }

    /// Copy with closed-form derivatives removed from `V` and `W`.
    pub fn dini_only(&self) -> Self {
        let mut c = self.clone();
        c.v = c.v.map(ScalarField::without_derivative);
        c.w = c.w.without_derivative();
        c
    }

    /// Summary used in reports.
    pub fn describe(&self) -> CertificateSummary {
        CertificateSummary {
            name: self.name.clone(),
            target: self.target,
            v: self.v.as_ref().map(|f| f.name().to_string()),
            w: self.w.name().to_string(),
            rho: self.rho,
            rho_monotone: self.rho.map(|r| r.is_non_decreasing()),
            a: self.a,
            b: self.b,
            gamma: self.gamma,
            zeta: self.zeta,
            side: self.side,
            closed_form_derivatives: self.w.has_derivative() || self.v.as_ref().is_some_and(|v| v.has_derivative()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateSummary {
    pub name: String,
    pub target: Target,
    pub v: Option<String>,
    pub w: String,
    pub rho: Option<ComparisonFn>,
    pub rho_monotone: Option<bool>,
    pub a: ComparisonFn,
    pub b: Option<ComparisonFn>,
    pub gamma: Option<ComparisonFn>,
    pub zeta: Option<ComparisonFn>,
    pub side: Option<Side>,
    pub closed_form_derivatives: bool,
}

/// `margin = rhs − lhs` passes iff `margin ≥ −(abs + rel·|rhs|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs: 1e-6, rel: 1e-4 }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }

    #[inline]
    pub fn allowance(&self, rhs: f64) -> f64 {
        self.abs + self.rel * rhs.abs()
    }

    #[inline]
    pub fn passes(&self, lhs: f64, rhs: f64) -> bool {
        rhs - lhs >= -self.allowance(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_quadratic_and_cubic() {
        assert!((inverse_comparison(&ComparisonFn::Quadratic { c: 0.5 }, 2.0).unwrap() - 2.0).abs() < 1e-12);
        assert!((inverse_comparison(&ComparisonFn::Linear { c: 3.0 }, 3.0).unwrap() - 1.0).abs() < 1e-12);
        let s = inverse_comparison(&ComparisonFn::Power { c: 1.0, p: 3.0 }, 8.0).unwrap();
        assert!((s - 2.0).abs() < 1e-10);
        assert_eq!(inverse_comparison(&ComparisonFn::Linear { c: 1.0 }, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn bounded_function_has_no_bracket() {
        let a = ComparisonFn::Capped { c: 1.0, cap: 1.0 };
        assert!(matches!(inverse_comparison(&a, 2.0), Err(Error::BracketNotFound { .. })));
    }

    #[test]
    fn class_checks() {
        assert!(ComparisonFn::Quadratic { c: 0.5 }.check_class_k_inf().is_ok());
        assert!(ComparisonFn::Capped { c: 1.0, cap: 2.0 }.check_class_k_inf().is_err());
        assert!(ComparisonFn::Constant { c: 0.25 }.check_class_k().is_err());
        assert!(ComparisonFn::Bump { c: 1.0 }.check_positive_definite().is_ok());
        assert!(!ComparisonFn::Bump { c: 1.0 }.is_non_decreasing());
        assert!(ComparisonFn::Linear { c: 0.0 }.check_positive_definite().is_err());
    }

    #[test]
    fn missing_fields_rejected() {
        let w = ScalarField::<[f64]>::new("W", |x| 0.5 * x[0] * x[0]);
        let parts = CertificateParts {
            w: Some(w.clone()),
            a: Some(ComparisonFn::Quadratic { c: 0.5 }),
            rho: Some(ComparisonFn::Linear { c: 2.0 }),
            ..Default::default()
        };
        match Certificate::new("no-v", Target::Thm1, parts) {
            Err(Error::Certificate(msg)) => assert!(msg.contains('V')),
            other => panic!("unexpected {other:?}"),
        }
        let parts = CertificateParts {
            v: Some(w.clone()),
            w: Some(w),
            a: Some(ComparisonFn::Quadratic { c: 0.5 }),
            rho: Some(ComparisonFn::Bump { c: 1.0 }),
            b: Some(ComparisonFn::Quadratic { c: 1.0 }),
            gamma: Some(ComparisonFn::Constant { c: 0.0 }),
            side: Some(Side::Upper),
            ..Default::default()
        };
        assert!(Certificate::new("no-zeta", Target::Thm2, parts).is_err());
    }

    #[test]
    fn tolerance_rule() {
        let t = Tolerance::default();
        assert!(t.passes(1.0 + 1e-5, 1.0));
        assert!(!t.passes(1.0 + 1e-3, 1.0));
        assert!(t.passes(5e-7, 0.0));
    }
}
