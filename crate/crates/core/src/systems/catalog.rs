use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::{integrate_history, quasi_random_ball, DelaySystem, HistoryQuery, OdeSystem, System};
use crate::adaptive::{closed_loop, AdaptiveConfig, AdaptivePlant};
use crate::error::{Error, Result};

pub const BUILTIN_NAMES: [&str; 6] =
    ["example1", "example2", "decoupled_linear", "adaptive_basic", "adaptive_redesigned", "spike_demo"];

/// One-line descriptions, in catalog order.
pub fn catalog_names() -> Vec<(&'static str, &'static str)> {
    vec![
        ("example1", "y' = -(1+w^2)y + 2zg/(1+z^2)^2, z' = -gy, w' = w + |y|; h = y (AOS, unbounded w)"),
        ("example2", "x1' = -p x1 + q x1(t-r) - g x1 x2, x2' = g x1^2; h = x1(0) (delay, UAOS on Omega)"),
        ("decoupled_linear", "y' = -y; h = y"),
        ("adaptive_basic", "scalar plant y' = u + theta y under the classical adaptive law, (y, z) coordinates"),
        ("adaptive_redesigned", "same plant under the redesigned law with gain L > 0, restricted to Omega"),
        ("spike_demo", "y' = -(1+w^2)y, w' = w; h = y (W = y^2/2 decreases, W' unbounded below)"),
    ]
}

/// The bounded nonlinearity `g` of both worked examples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
#[derive(Default)]
pub enum GFunction {
    /// `sin(a·b)`
    #[default]
    Sin,
    /// `tanh(a + b)`
    Tanh,
    Const(f64),
}

impl GFunction {
    #[inline]
    pub fn eval(&self, a: f64, b: f64) -> f64 {
        match *self {
            GFunction::Sin => (a * b).sin(),
            GFunction::Tanh => (a + b).tanh(),
            GFunction::Const(c) => c,
        }
    }

    /// `R_g = sup |g|`.
    pub fn bound(&self) -> f64 {
        match *self {
            GFunction::Sin | GFunction::Tanh => 1.0,
            GFunction::Const(c) => c.abs(),
        }
    }
}


impl fmt::Display for GFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GFunction::Sin => write!(f, "sin"),
            GFunction::Tanh => write!(f, "tanh"),
            GFunction::Const(c) => write!(f, "const:{c}"),
        }
    }
}

impl FromStr for GFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sin" => Ok(GFunction::Sin),
            "tanh" => Ok(GFunction::Tanh),
            _ => {
                let c = s
                    .strip_prefix("const:")
                    .and_then(|v| v.parse::<f64>().ok())
                    .filter(|c| c.is_finite())
                    .ok_or_else(|| Error::InvalidConfig(format!("unknown g `{s}` (expected sin, tanh, const:<c>)")))?;
                Ok(GFunction::Const(c))
            }
        }
    }
}

/// Named real parameters plus the choice of `g`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Params {
    pub values: BTreeMap<String, f64>,
    pub g: GFunction,
}

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.values.insert(key.to_string(), value);
        self
    }

    pub fn with_g(mut self, g: GFunction) -> Self {
        self.g = g;
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }

    pub fn get_or(&self, key: &str, default: f64) -> f64 {
        self.get(key).unwrap_or(default)
    }

    /// Parses `key=value`.
    pub fn insert_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("parameter `{pair}` is not key=value")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("parameter `{k}` has non-numeric value `{v}`")))?;
        if !v.is_finite() {
            return Err(Error::InvalidConfig(format!("parameter `{k}` must be finite")));
        }
        self.values.insert(k.trim().to_string(), v);
        Ok(())
    }

    fn reject_unknown(&self, system: &str, allowed: &[&str]) -> Result<()> {
        match self.values.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(Error::InvalidConfig(format!(
                "system `{system}` has no parameter `{k}` (accepted: {})",
                if allowed.is_empty() { "none".to_string() } else { allowed.join(", ") }
            ))),
            None => Ok(()),
        }
    }
}

/// Builds a catalog system by name.
pub fn builtin(name: &str, params: &Params) -> Result<System> {
    match name {
        "example1" => {
            params.reject_unknown(name, &[])?;
            Ok(System::Ode(example1(params.g)))
        }
        "example2" => {
            params.reject_unknown(name, &["p", "q", "Q", "sigma", "r", "R"])?;
            let c = Example2Constants::from_params(params);
            Ok(System::Delay(Example2::new(c)?.system()))
        }
        "decoupled_linear" => {
            params.reject_unknown(name, &[])?;
            Ok(System::Ode(decoupled_linear()))
        }
        "adaptive_basic" => {
            params.reject_unknown(name, &["gamma"])?;
            let cfg = AdaptiveConfig::new(params.get_or("gamma", 1.0), 0.0)?;
            Ok(System::Ode(closed_loop(&AdaptivePlant::scalar_demo(), &cfg)?.named("adaptive_basic")))
        }
        "adaptive_redesigned" => {
            params.reject_unknown(name, &["gamma", "L"])?;
            let l = params.get_or("L", 2.0);
            if !(l > 0.0) {
                return Err(Error::InvalidConfig(format!("adaptive_redesigned needs L > 0, got {l}")));
            }
            let cfg = AdaptiveConfig::new(params.get_or("gamma", 1.0), l)?;
            Ok(System::Ode(closed_loop(&AdaptivePlant::scalar_demo(), &cfg)?.named("adaptive_redesigned")))
        }
        "spike_demo" => {
            params.reject_unknown(name, &[])?;
            Ok(System::Ode(spike_demo()))
        }
        other => Err(Error::UnknownSystem(other.to_string())),
    }
}

fn example1(g: GFunction) -> OdeSystem {
    let field = move |x: &[f64]| {
        let (y, z, w) = (x[0], x[1], x[2]);
        let gz = g.eval(z, w);
        let d = 1.0 + z * z;
        vec![-(1.0 + w * w) * y + 2.0 * z * gz / (d * d), -gz * y, w + y.abs()]
    };
    let mut p = BTreeMap::new();
    p.insert("R_g".to_string(), g.bound());
    OdeSystem::new("example1", 3, 1, field, |x| vec![x[0]]).with_params(p)
}

fn decoupled_linear() -> OdeSystem {
    OdeSystem::new("decoupled_linear", 1, 1, |x| vec![-x[0]], |x| vec![x[0]])
}

fn spike_demo() -> OdeSystem {
    OdeSystem::new("spike_demo", 2, 1, |x| vec![-(1.0 + x[1] * x[1]) * x[0], x[1]], |x| vec![x[0]])
}

/// Constants of the delay example.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Example2Constants {
    pub p: f64,
    pub q: f64,
    #[serde(rename = "Q")]
    pub big_q: f64,
    pub sigma: f64,
    pub r: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub g: GFunction,
}

impl Default for Example2Constants {
    fn default() -> Self {
        Self { p: 2.0, q: 0.1, big_q: 0.5, sigma: 1.0, r: 1.0, radius: 1.0, g: GFunction::Sin }
    }
}

impl Example2Constants {
    pub fn from_params(params: &Params) -> Self {
        let d = Self::default();
        Self {
            p: params.get_or("p", d.p),
            q: params.get_or("q", d.q),
            big_q: params.get_or("Q", d.big_q),
            sigma: params.get_or("sigma", d.sigma),
            r: params.get_or("r", d.r),
            radius: params.get_or("R", d.radius),
            g: params.g,
        }
    }

    /// `λ = q²·e^{σr} / (4Q)`.
    pub fn lambda(&self) -> f64 {
        self.q * self.q * (self.sigma * self.r).exp() / (4.0 * self.big_q)
    }

    /// `K = σQ / (2(p − Q − λ))`.
    pub fn k(&self) -> f64 {
        self.sigma * self.big_q / (2.0 * (self.p - self.big_q - self.lambda()))
    }

    /// Constant left-hand side of the pointwise feasibility inequality
    /// `(4λ(p−Q−λ)² + σ²Q) / (2σ(p−Q−λ)) ≤ p + g(x)·x₂` on `|x| ≤ R`.
    pub fn feasibility_lhs(&self) -> f64 {
        let d = self.p - self.big_q - self.lambda();
        (4.0 * self.lambda() * d * d + self.sigma * self.sigma * self.big_q) / (2.0 * self.sigma * d)
    }

    pub fn feasibility_rhs(&self, x1: f64, x2: f64) -> f64 {
        self.p + self.g.eval(x1, x2) * x2
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("p", self.p), ("Q", self.big_q), ("sigma", self.sigma), ("r", self.r), ("R", self.radius)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("example2 needs {name} > 0, got {v}")));
            }
        }
        if !self.q.is_finite() {
            return Err(Error::InvalidConfig("example2 needs finite q".into()));
        }
        Ok(())
    }
}

/// Number of quasi-random disk points used for the feasibility check.
pub const FEASIBILITY_SAMPLES: usize = 10_000;

/// The delay example with its derived constants and feasibility record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Example2 {
    pub constants: Example2Constants,
    pub lambda: f64,
    #[serde(rename = "K")]
    pub k: f64,
    /// Left side of the pointwise feasibility inequality (a constant).
    pub feasibility_lhs: f64,
    /// Sampled minimum of `p + g(x)·x₂` over the closed disk `|x| ≤ R`.
    pub feasibility_min_rhs: f64,
    /// Where the sampled minimum occurs.
    pub feasibility_argmin: [f64; 2],
    pub feasibility_samples: usize,
}

impl Example2 {
    /// Checked construction: fails when `λ ≥ p − Q` or when the sampled
    /// feasibility inequality is violated somewhere in the disk.
    pub fn new(constants: Example2Constants) -> Result<Self> {
        constants.validate()?;
        let lambda = constants.lambda();
        if lambda >= constants.p - constants.big_q {
            return Err(Error::Infeasible {
                condition: "lambda < p - Q".into(),
                detail: format!("lambda = {lambda:.6} >= p - Q = {:.6}", constants.p - constants.big_q),
            });
        }
        let ex = Self::unchecked(constants);
        if ex.feasibility_lhs > ex.feasibility_min_rhs {
            return Err(Error::Infeasible {
                condition: "rhs-dominance on |x| <= R".into(),
                detail: format!(
                    "lhs = {:.6} > p + g(x)x2 = {:.6} at x = ({:.4}, {:.4})",
                    ex.feasibility_lhs, ex.feasibility_min_rhs, ex.feasibility_argmin[0], ex.feasibility_argmin[1]
                ),
            });
        }
        Ok(ex)
    }

    /// Records constants without rejecting infeasible ones (for violation demos).
    pub fn unchecked(constants: Example2Constants) -> Self {
        let r = constants.radius;
        let mut min_rhs = f64::INFINITY;
        let mut argmin = [0.0, 0.0];
        let boundary = (0..256).map(|k| {
            let a = std::f64::consts::TAU * k as f64 / 256.0;
            vec![r * a.cos(), r * a.sin()]
        });
        for x in quasi_random_ball(2, r, FEASIBILITY_SAMPLES).into_iter().chain(boundary) {
            let v = constants.feasibility_rhs(x[0], x[1]);
            if v < min_rhs {
                min_rhs = v;
                argmin = [x[0], x[1]];
            }
        }
        Self {
            constants,
            lambda: constants.lambda(),
            k: constants.k(),
            feasibility_lhs: constants.feasibility_lhs(),
            feasibility_min_rhs: min_rhs,
            feasibility_argmin: argmin,
            feasibility_samples: FEASIBILITY_SAMPLES + 256,
        }
    }

    /// `ρ(s) = 2(p − Q − λ)s` slope.
    pub fn rho_slope(&self) -> f64 {
        2.0 * (self.constants.p - self.constants.big_q - self.lambda)
    }

    /// `V(x) = ½x₁(0)² + Q∫e^{σs}x₁(s)²ds + ½x₂(0)²`.
    pub fn v(&self, h: &dyn HistoryQuery) -> f64 {
        let c = &self.constants;
        let x = h.current();
        0.5 * x[0] * x[0] + c.big_q * weighted_energy(h, c.sigma) + 0.5 * x[1] * x[1]
    }

    /// `W(x) = ½x₁(0)² + K∫e^{σs}x₁(s)²ds`.
    pub fn w(&self, h: &dyn HistoryQuery) -> f64 {
        let x = h.current();
        0.5 * x[0] * x[0] + self.k * weighted_energy(h, self.constants.sigma)
    }

    /// Exact right derivative of `V` along solutions.
    pub fn v_dot(&self, h: &dyn HistoryQuery) -> f64 {
        let c = &self.constants;
        let x = h.current();
        let xr = h.at(-c.r)[0];
        -(c.p - c.big_q) * x[0] * x[0] + c.q * xr * x[0]
            - c.sigma * c.big_q * weighted_energy(h, c.sigma)
            - c.big_q * (-c.sigma * c.r).exp() * xr * xr
    }

    /// Exact right derivative of `W` along solutions.
    pub fn w_dot(&self, h: &dyn HistoryQuery) -> f64 {
        let c = &self.constants;
        let x = h.current();
        let xr = h.at(-c.r)[0];
        -(c.p - self.k + c.g.eval(x[0], x[1]) * x[1]) * x[0] * x[0] + c.q * xr * x[0]
            - c.sigma * self.k * weighted_energy(h, c.sigma)
            - self.k * (-c.sigma * c.r).exp() * xr * xr
    }

    pub fn system(&self) -> DelaySystem {
        let c = self.constants;
        let field = move |h: &dyn HistoryQuery| {
            let x = h.current();
            let xr = h.at(-c.r);
            let g = c.g.eval(x[0], x[1]);
            vec![-c.p * x[0] + c.q * xr[0] - g * x[0] * x[1], g * x[0] * x[0]]
        };
        let ex = self.clone();
        let level = 0.5 * c.radius * c.radius;
        let mut params = BTreeMap::new();
        params.insert("p".to_string(), c.p);
        params.insert("q".to_string(), c.q);
        params.insert("Q".to_string(), c.big_q);
        params.insert("sigma".to_string(), c.sigma);
        params.insert("r".to_string(), c.r);
        params.insert("R".to_string(), c.radius);
        params.insert("R_g".to_string(), c.g.bound());
        params.insert("lambda".to_string(), self.lambda);
        params.insert("K".to_string(), self.k);
        params.insert("feasibility_lhs".to_string(), self.feasibility_lhs);
        params.insert("feasibility_min_rhs".to_string(), self.feasibility_min_rhs);
        DelaySystem::new("example2", 2, 1, c.r, field, |h: &dyn HistoryQuery| vec![h.current()[0]])
            .expect("r validated")
            .with_domain(move |h: &dyn HistoryQuery| ex.v(h) <= level)
            .with_params(params)
    }
}

/// `∫_{-r}^0 e^{σs} x₁(s)² ds`.
pub(crate) fn weighted_energy(h: &dyn HistoryQuery, sigma: f64) -> f64 {
    integrate_history(h, |s, x| (sigma * s).exp() * x[0] * x[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::History;

    #[test]
    fn example1_field_by_hand() {
        let sys = builtin("example1", &Params::new()).unwrap();
        let sys = sys.as_ode().unwrap();
        assert_eq!(sys.eval_field(&[0.0, 0.0, 0.0]).unwrap(), vec![0.0, 0.0, 0.0]);
        assert_eq!(sys.eval_field(&[1.0, 0.0, 0.0]).unwrap(), vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn example2_default_constants() {
        let ex = Example2::new(Example2Constants::default()).unwrap();
        assert!((ex.lambda - 0.013_591_409_142_295_2).abs() < 1e-12);
        assert!((ex.k - 0.168_190_632).abs() < 1e-8);
        assert!((ex.feasibility_lhs - 0.208_595_4).abs() < 1e-6);
        assert!(ex.feasibility_min_rhs > 1.6 && ex.feasibility_min_rhs < 1.7);
        assert!((ex.rho_slope() - 2.972_817_18).abs() < 1e-7);
    }

    #[test]
    fn example2_lambda_too_large() {
        let c = Example2Constants { p: 1.0, q: 2.0, ..Default::default() };
        match Example2::new(c) {
            Err(Error::Infeasible { condition, detail }) => {
                assert_eq!(condition, "lambda < p - Q");
                assert!(detail.contains("5.43"), "{detail}");
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn example2_inflated_radius_rejected() {
        let c = Example2Constants { radius: 10.0, ..Default::default() };
        assert!(matches!(Example2::new(c), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn catalog_equilibria() {
        for name in BUILTIN_NAMES {
            match builtin(name, &Params::new()).unwrap() {
                System::Ode(s) => {
                    let z = vec![0.0; s.dim()];
                    assert!(s.eval_field(&z).unwrap().iter().all(|v| *v == 0.0), "{name}");
                    assert!(s.eval_output(&z).unwrap().iter().all(|v| *v == 0.0), "{name}");
                    assert!(s.in_domain(&z), "{name}");
                }
                System::Delay(s) => {
                    let h = History::zero(s.delay(), s.dim());
                    assert!(s.eval_field(&h).unwrap().iter().all(|v| *v == 0.0));
                    assert!(s.eval_output(&h).unwrap().iter().all(|v| *v == 0.0));
                    assert!(s.in_domain(&h));
                }
            }
        }
    }

    #[test]
    fn unknown_name_and_parameter() {
        assert!(matches!(builtin("nope", &Params::new()), Err(Error::UnknownSystem(_))));
        assert!(builtin("example1", &Params::new().with("zz", 1.0)).is_err());
    }

    #[test]
    fn g_parsing() {
        assert_eq!("sin".parse::<GFunction>().unwrap(), GFunction::Sin);
        assert_eq!("const:0.5".parse::<GFunction>().unwrap(), GFunction::Const(0.5));
        assert!("cos".parse::<GFunction>().is_err());
    }
}
