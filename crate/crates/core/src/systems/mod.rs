//! Executable dynamical systems with outputs.
//!
//! [`OdeSystem`] is `ẋ = f(x), y = h(x)` on a subset of ℝⁿ; [`DelaySystem`]
//! is `ẋ(t) = f(x_t), y = h(x_t)` with state segments on `[-r, 0]`. Both may
//! carry a membership predicate for a positively invariant set Ω. The
//! [`catalog`] module ships the named example systems.

mod catalog;
mod history;
mod sampling;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

pub use catalog::{builtin, catalog_names, Example2, Example2Constants, GFunction, Params, BUILTIN_NAMES, FEASIBILITY_SAMPLES};
pub use history::{integrate_history, sup_norm, History, HistoryQuery};
pub use sampling::{halton, halton_ball, quasi_random_ball, HistoryFamily};

/// A state vector with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateVec(Vec<f64>);

impl StateVec {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if let Some(i) = entries.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { what: "state".into(), coordinate: i });
        }
        Ok(Self(entries))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn norm(&self) -> f64 {
        euclid(&self.0)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for StateVec {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for StateVec {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

pub(crate) fn euclid(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub type VectorField = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type DomainPredicate = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;
pub type DelayField = Arc<dyn Fn(&dyn HistoryQuery) -> Vec<f64> + Send + Sync>;
pub type DelayPredicate = Arc<dyn Fn(&dyn HistoryQuery) -> bool + Send + Sync>;

/// `ẋ = f(x)`, `y = h(x)`, optionally restricted to Ω.
#[derive(Clone)]
pub struct OdeSystem {
    name: String,
    n: usize,
    k: usize,
    field: VectorField,
    output: VectorField,
    in_domain: Option<DomainPredicate>,
    params: BTreeMap<String, f64>,
}

impl fmt::Debug for OdeSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OdeSystem")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("k", &self.k)
            .field("has_domain", &self.in_domain.is_some())
            .field("params", &self.params)
            .finish()
    }
}

impl OdeSystem {
    pub fn new(
        name: impl Into<String>,
        n: usize,
        k: usize,
        field: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        output: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            n,
            k,
            field: Arc::new(field),
            output: Arc::new(output),
            in_domain: None,
            params: BTreeMap::new(),
        }
    }

    pub fn with_domain(mut self, pred: impl Fn(&[f64]) -> bool + Send + Sync + 'static) -> Self {
        self.in_domain = Some(Arc::new(pred));
        self
    }

    pub fn with_params(mut self, params: BTreeMap<String, f64>) -> Self {
        self.params = params;
        self
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn output_dim(&self) -> usize {
        self.k
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn has_domain(&self) -> bool {
        self.in_domain.is_some()
    }

    /// `f(x)`, checked for dimension and finiteness.
    pub fn eval_field(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let fx = (self.field)(x);
        if let Some(i) = fx.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: format!("{} vector field", self.name), coordinate: i });
        }
        Ok(fx)
    }

    pub fn eval_output(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok((self.output)(x))
    }

    /// Ω membership; `true` everywhere when no predicate is attached.
    pub fn in_domain(&self, x: &[f64]) -> bool {
        self.in_domain.as_ref().is_none_or(|p| p(x))
    }

    pub(crate) fn field_fn(&self) -> &VectorField {
        &self.field
    }

    pub(crate) fn output_fn(&self) -> &VectorField {
        &self.output
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.len() });
        }
        Ok(())
    }
}

/// `ẋ(t) = f(x_t)`, `y = h(x_t)` with delay horizon `r`.
#[derive(Clone)]
pub struct DelaySystem {
    name: String,
    n: usize,
    k: usize,
    r: f64,
    field: DelayField,
    output: DelayField,
    in_domain: Option<DelayPredicate>,
    params: BTreeMap<String, f64>,
}

impl fmt::Debug for DelaySystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DelaySystem")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("k", &self.k)
            .field("r", &self.r)
            .field("has_domain", &self.in_domain.is_some())
            .field("params", &self.params)
            .finish()
    }
}

impl DelaySystem {
    pub fn new(
        name: impl Into<String>,
        n: usize,
        k: usize,
        r: f64,
        field: impl Fn(&dyn HistoryQuery) -> Vec<f64> + Send + Sync + 'static,
        output: impl Fn(&dyn HistoryQuery) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidConfig(format!("delay horizon must be > 0, got {r}")));
        }
        Ok(Self {
            name: name.into(),
            n,
            k,
            r,
            field: Arc::new(field),
            output: Arc::new(output),
            in_domain: None,
            params: BTreeMap::new(),
        })
    }

    pub fn with_domain(mut self, pred: impl Fn(&dyn HistoryQuery) -> bool + Send + Sync + 'static) -> Self {
        self.in_domain = Some(Arc::new(pred));
        self
    }

    pub fn with_params(mut self, params: BTreeMap<String, f64>) -> Self {
        self.params = params;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn output_dim(&self) -> usize {
        self.k
    }

    pub fn delay(&self) -> f64 {
        self.r
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn has_domain(&self) -> bool {
        self.in_domain.is_some()
    }

    pub fn eval_field(&self, h: &dyn HistoryQuery) -> Result<Vec<f64>> {
        self.check(h)?;
        let fx = (self.field)(h);
        if let Some(i) = fx.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: format!("{} vector field", self.name), coordinate: i });
        }
        Ok(fx)
    }

    pub fn eval_output(&self, h: &dyn HistoryQuery) -> Result<Vec<f64>> {
        self.check(h)?;
        Ok((self.output)(h))
    }

    pub fn in_domain(&self, h: &dyn HistoryQuery) -> bool {
        self.in_domain.as_ref().is_none_or(|p| p(h))
    }

    pub(crate) fn field_fn(&self) -> &DelayField {
        &self.field
    }

    pub(crate) fn output_fn(&self) -> &DelayField {
        &self.output
    }

    fn check(&self, h: &dyn HistoryQuery) -> Result<()> {
        if h.dim() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: h.dim() });
        }
        if (h.horizon() - self.r).abs() > 1e-12 * self.r {
            return Err(Error::InvalidConfig(format!(
                "history horizon {} differs from system delay {}",
                h.horizon(),
                self.r
            )));
        }
        Ok(())
    }
}

/// Either kind of catalog system.
#[derive(Debug, Clone)]
pub enum System {
    Ode(OdeSystem),
    Delay(DelaySystem),
}

impl System {
    pub fn name(&self) -> &str {
        match self {
            System::Ode(s) => s.name(),
            System::Delay(s) => s.name(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            System::Ode(s) => s.dim(),
            System::Delay(s) => s.dim(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            System::Ode(s) => s.output_dim(),
            System::Delay(s) => s.output_dim(),
        }
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        match self {
            System::Ode(s) => s.params(),
            System::Delay(s) => s.params(),
        }
    }

    pub fn as_ode(&self) -> Option<&OdeSystem> {
        match self {
            System::Ode(s) => Some(s),
            System::Delay(_) => None,
        }
    }

    pub fn as_delay(&self) -> Option<&DelaySystem> {
        match self {
            System::Delay(s) => Some(s),
            System::Ode(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_vec_rejects_nan() {
        assert!(StateVec::new(vec![1.0, f64::INFINITY]).is_err());
        assert_eq!(StateVec::new(vec![3.0, 4.0]).unwrap().norm(), 5.0);
    }

    #[test]
    fn eval_field_checks_dimension() {
        let sys = OdeSystem::new("neg", 1, 1, |x| vec![-x[0]], |x| vec![x[0]]);
        assert_eq!(sys.eval_field(&[2.0]).unwrap(), vec![-2.0]);
        assert!(matches!(
            sys.eval_field(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn eval_field_reports_non_finite_coordinate() {
        let sys = OdeSystem::new("bad", 2, 1, |x| vec![x[0], 1.0 / x[1]], |x| vec![x[0]]);
        match sys.eval_field(&[1.0, 0.0]) {
            Err(Error::NonFinite { coordinate, .. }) => assert_eq!(coordinate, 1),
            other => panic!("unexpected {other:?}"),
        }
    }
}
