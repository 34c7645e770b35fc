//! Adaptive stabilization of a matched-uncertainty plant
//!
//! ```text
//!     ẏ = f(y) + g(y)·(u + φ(y)ᵀθ)
//! ```
//!
//! with unknown θ. The classical law (`L = 0`) and the redesigned law with an
//! extra damping term `−L·μ(y)·∇P(y)g(y)` are assembled in error coordinates
//! `x = (y, z)`, `z = θ̂ − θ`, where the closed loop no longer depends on θ.
//! Only the redesigned loop admits a uniform certificate, valid on the
//! sublevel set `Ω = {P(y) + (γ/2)|z|² ≤ γL}`.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificates::{Certificate, CertificateParts, ComparisonFn, ScalarField, Target, Tolerance};
use crate::convergence::empirical_conv_time;
use crate::error::{Error, Result};
use crate::integrate::{integrate_ode, IntegratorConfig, Trajectory};
use crate::systems::{halton_ball, OdeSystem};

type VecMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type RealMap = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Plant data satisfying the structural assumptions of the adaptive design:
/// `∇P·(f + g·k) ≤ −Q` (stabilizability with a known Lyapunov pair) and
/// `|φ|² ≤ μ·Q` (regressor dominated by the dissipation).
#[derive(Clone)]
pub struct AdaptivePlant {
    name: String,
    n: usize,
    p: usize,
    f: VecMap,
    g: VecMap,
    phi: VecMap,
    lyap: RealMap,
    grad_lyap: VecMap,
    q: RealMap,
    k: RealMap,
    mu: RealMap,
    /// `ρ` with `Q(y) ≥ ρ(P(y))`
    rho: ComparisonFn,
    /// `a` with `a(|y|) ≤ P(y)`
    a: ComparisonFn,
}

impl std::fmt::Debug for AdaptivePlant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AdaptivePlant")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("p", &self.p)
            .field("rho", &self.rho)
            .field("a", &self.a)
            .finish_non_exhaustive()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl AdaptivePlant {
    /// `ẏ = u + θy`: f = 0, g = 1, φ(y) = y, k(y) = −y, P = ½y², Q = y², μ ≡ 1.
    pub fn scalar_demo() -> Self {
        Self {
            name: "scalar_demo".into(),
            n: 1,
            p: 1,
            f: Arc::new(|_| vec![0.0]),
            g: Arc::new(|_| vec![1.0]),
            phi: Arc::new(|y| vec![y[0]]),
            lyap: Arc::new(|y| 0.5 * y[0] * y[0]),
            grad_lyap: Arc::new(|y| vec![y[0]]),
            q: Arc::new(|y| y[0] * y[0]),
            k: Arc::new(|y| -y[0]),
            mu: Arc::new(|_| 1.0),
            rho: ComparisonFn::Linear { c: 2.0 },
            a: ComparisonFn::Quadratic { c: 0.5 },
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Plant state dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Parameter dimension.
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn lyapunov(&self, y: &[f64]) -> f64 {
        (self.lyap)(y)
    }

    pub fn dissipation(&self, y: &[f64]) -> f64 {
        (self.q)(y)
    }

    pub fn rho(&self) -> ComparisonFn {
        self.rho
    }

    pub fn a(&self) -> ComparisonFn {
        self.a
    }

    /// `∇P(y)·g(y)`
    pub fn lg_p(&self, y: &[f64]) -> f64 {
        dot(&(self.grad_lyap)(y), &(self.g)(y))
    }

    /// `∇P(y)·(f(y) + g(y)k(y))`
    fn nominal_decay(&self, y: &[f64]) -> f64 {
        let k = (self.k)(y);
        let f = (self.f)(y);
        let g = (self.g)(y);
        let rhs: Vec<f64> = f.iter().zip(&g).map(|(fi, gi)| fi + gi * k).collect();
        dot(&(self.grad_lyap)(y), &rhs)
    }

    /// Both structural assumptions at sampled plant states in `|y| ≤ radius`.
    pub fn check_assumptions(&self, radius: f64, count: usize, tol: f64) -> Result<AssumptionReport> {
        if !(radius > 0.0) || count == 0 {
            return Err(Error::InvalidConfig("assumption check needs radius > 0 and count ≥ 1".into()));
        }
        let mut pts: Vec<Vec<f64>> = vec![vec![0.0; self.n]];
        if self.n == 1 {
            pts.extend((0..count).map(|i| vec![-radius + 2.0 * radius * i as f64 / (count.max(2) - 1) as f64]));
        } else {
            pts.extend(halton_ball(self.n, radius).take(count));
        }
        let mut h_margin = f64::INFINITY;
        let mut a_margin = f64::INFINITY;
        let mut h_witness = Vec::new();
        let mut a_witness = Vec::new();
        for y in &pts {
            let q = (self.q)(y);
            let m = -q - self.nominal_decay(y);
            if m < h_margin {
                h_margin = m;
                h_witness = y.clone();
            }
            let phi = (self.phi)(y);
            let m = (self.mu)(y) * q - dot(&phi, &phi);
            if m < a_margin {
                a_margin = m;
                a_witness = y.clone();
            }
        }
        Ok(AssumptionReport {
            points: pts.len(),
            tol,
            stabilizability_margin: h_margin,
            stabilizability_witness: h_witness,
            stabilizability_pass: h_margin >= -tol,
            regressor_margin: a_margin,
            regressor_witness: a_witness,
            regressor_pass: a_margin >= -tol,
        })
    }
}

/// Worst margins of the two sampled plant assumptions (margin = rhs − lhs).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub points: usize,
    pub tol: f64,
    /// `−Q − ∇P·(f + gk)`
    pub stabilizability_margin: f64,
    pub stabilizability_witness: Vec<f64>,
    pub stabilizability_pass: bool,
    /// `μQ − |φ|²`
    pub regressor_margin: f64,
    pub regressor_witness: Vec<f64>,
    pub regressor_pass: bool,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.stabilizability_pass && self.regressor_pass
    }
}

/// Controller gains and the (simulation-only) true parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveConfig {
    pub gamma: f64,
    /// Damping gain; 0 selects the classical law.
    #[serde(rename = "L")]
    pub l: f64,
    pub theta: Vec<f64>,
    pub theta_hat0: Vec<f64>,
}

impl AdaptiveConfig {
    /// Scalar parameter with θ = 1 and θ̂(0) = 0.
    pub fn new(gamma: f64, l: f64) -> Result<Self> {
        let cfg = Self { gamma, l, theta: vec![1.0], theta_hat0: vec![0.0] };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_theta(mut self, theta: Vec<f64>) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_theta_hat0(mut self, theta_hat0: Vec<f64>) -> Self {
        self.theta_hat0 = theta_hat0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidConfig(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if !(self.l >= 0.0) || !self.l.is_finite() {
            return Err(Error::InvalidConfig(format!("L must be ≥ 0, got {}", self.l)));
        }
        if self.theta.len() != self.theta_hat0.len() {
            return Err(Error::DimensionMismatch { expected: self.theta.len(), got: self.theta_hat0.len() });
        }
        Ok(())
    }

    fn check_for(&self, plant: &AdaptivePlant) -> Result<()> {
        self.validate()?;
        if self.theta.len() != plant.p {
            return Err(Error::DimensionMismatch { expected: plant.p, got: self.theta.len() });
        }
        Ok(())
    }

    /// Error-coordinate initial state `(y₀, θ̂(0) − θ)`.
    pub fn error_state(&self, y0: &[f64]) -> Vec<f64> {
        y0.iter().copied().chain(self.theta_hat0.iter().zip(&self.theta).map(|(h, t)| h - t)).collect()
    }
}

/// Update law `θ̂' = γ⁻¹·(∇P·g)·φ`, shared by both schemes.
fn update_law(plant: &AdaptivePlant, gamma: f64, y: &[f64]) -> Vec<f64> {
    let lg = plant.lg_p(y);
    (plant.phi)(y).into_iter().map(|v| lg * v / gamma).collect()
}

/// Classical certainty-equivalence law: `u = k(y) − φ(y)ᵀθ̂`.
pub fn control_basic(plant: &AdaptivePlant, cfg: &AdaptiveConfig, y: &[f64], theta_hat: &[f64]) -> (f64, Vec<f64>) {
    let u = (plant.k)(y) - dot(&(plant.phi)(y), theta_hat);
    (u, update_law(plant, cfg.gamma, y))
}

/// Redesigned law: the classical one plus `−L·μ(y)·∇P(y)g(y)`.
pub fn control_redesigned(
    plant: &AdaptivePlant,
    cfg: &AdaptiveConfig,
    y: &[f64],
    theta_hat: &[f64],
) -> (f64, Vec<f64>) {
    let (u, th) = control_basic(plant, cfg, y, theta_hat);
    (u - cfg.l * (plant.mu)(y) * plant.lg_p(y), th)
}

/// `P(y) + (γ/2)|z|²`
fn composite(plant: &AdaptivePlant, gamma: f64, x: &[f64]) -> f64 {
    let (y, z) = x.split_at(plant.n);
    plant.lyapunov(y) + 0.5 * gamma * dot(z, z)
}

/// Membership in `Ω = {P(y) + (γ/2)|z|² ≤ γL}`.
pub fn omega_member(plant: &AdaptivePlant, cfg: &AdaptiveConfig, x: &[f64]) -> bool {
    composite(plant, cfg.gamma, x) <= cfg.gamma * cfg.l
}

/// Closed loop in `(y, z)` coordinates; independent of θ. The domain is Ω
/// when `L > 0`.
pub fn closed_loop(plant: &AdaptivePlant, cfg: &AdaptiveConfig) -> Result<OdeSystem> {
    cfg.check_for(plant)?;
    let (n, p) = (plant.n, plant.p);
    let pl = plant.clone();
    let (gamma, l) = (cfg.gamma, cfg.l);
    let field = move |x: &[f64]| -> Vec<f64> {
        let (y, z) = x.split_at(n);
        let lg = pl.lg_p(y);
        let phi = (pl.phi)(y);
        let u = (pl.k)(y) - l * (pl.mu)(y) * lg - dot(&phi, z);
        let f = (pl.f)(y);
        let g = (pl.g)(y);
        let mut out: Vec<f64> = f.iter().zip(&g).map(|(fi, gi)| fi + gi * u).collect();
        out.extend(phi.iter().map(|v| lg * v / gamma));
        out
    };
    let scheme = if l > 0.0 { "redesigned" } else { "basic" };
    let mut params = BTreeMap::new();
    params.insert("gamma".to_string(), gamma);
    params.insert("L".to_string(), l);
    let sys = OdeSystem::new(format!("{}_{scheme}", plant.name), n + p, n, field, move |x: &[f64]| x[..n].to_vec())
        .with_params(params);
    if l > 0.0 {
        let pl = plant.clone();
        let cap = gamma * l;
        Ok(sys.with_domain(move |x| composite(&pl, gamma, x) <= cap))
    } else {
        Ok(sys)
    }
}

/// Closed loop in the original `(y, θ̂)` coordinates for the configured θ;
/// used to overlay runs with different true parameters.
pub fn plant_loop(plant: &AdaptivePlant, cfg: &AdaptiveConfig) -> Result<OdeSystem> {
    cfg.check_for(plant)?;
    let n = plant.n;
    let pl = plant.clone();
    let c = cfg.clone();
    let field = move |x: &[f64]| -> Vec<f64> {
        let (y, th) = x.split_at(n);
        let (u, dth) = if c.l > 0.0 { control_redesigned(&pl, &c, y, th) } else { control_basic(&pl, &c, y, th) };
        let drive = u + dot(&(pl.phi)(y), &c.theta);
        let mut out: Vec<f64> = (pl.f)(y).iter().zip(&(pl.g)(y)).map(|(fi, gi)| fi + gi * drive).collect();
        out.extend(dth);
        out
    };
    Ok(OdeSystem::new(format!("{}_plant", plant.name), n + plant.p, n, field, move |x: &[f64]| x[..n].to_vec()))
}

/// Uniform certificate for the redesigned loop: `V = P(y) + (γ/2)|z|²`,
/// `W = P(y)`, with the plant's closed-form `ρ` and `a`. Derivative hooks are
/// the exact derivatives along the closed loop.
pub fn thm3_certificate(plant: &AdaptivePlant, cfg: &AdaptiveConfig) -> Result<Certificate<[f64]>> {
    cfg.check_for(plant)?;
    if !(cfg.l > 0.0) {
        return Err(Error::Certificate(
            "the classical adaptive law (L = 0) has no uniform certificate; use L > 0".into(),
        ));
    }
    let n = plant.n;
    let (gamma, l) = (cfg.gamma, cfg.l);
    let pv = plant.clone();
    let pvd = plant.clone();
    let pw = plant.clone();
    let pwd = plant.clone();
    let v = ScalarField::<[f64]>::new("P(y) + gamma/2 |z|^2", move |x| composite(&pv, gamma, x)).with_derivative(
        move |x| {
            let y = &x[..n];
            let lg = pvd.lg_p(y);
            pvd.nominal_decay(y) - l * (pvd.mu)(y) * lg * lg
        },
    );
    let w = ScalarField::<[f64]>::new("P(y)", move |x| pw.lyapunov(&x[..n]))
        .with_derivative(move |x| p_rate(&pwd, l, x));
    Certificate::new(
        "adaptive-thm1",
        Target::Thm1,
        CertificateParts { v: Some(v), w: Some(w), rho: Some(plant.rho), a: Some(plant.a), ..Default::default() },
    )
}

/// `Ṗ` along the closed loop at `x = (y, z)`.
fn p_rate(plant: &AdaptivePlant, l: f64, x: &[f64]) -> f64 {
    let (y, z) = x.split_at(plant.n);
    let lg = plant.lg_p(y);
    plant.nominal_decay(y) - l * (plant.mu)(y) * lg * lg - lg * dot(&(plant.phi)(y), z)
}

/// Worst case of `Ṗ ≤ −½Q(y)` over the knots of trajectories lying in Ω.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub points: usize,
    /// `−½Q − Ṗ` at the witness (smallest seen)
    pub margin: f64,
    pub witness_t: Option<f64>,
    pub witness_state: Vec<f64>,
    pub passed: bool,
}

pub fn check_p_decay(
    plant: &AdaptivePlant,
    cfg: &AdaptiveConfig,
    trajs: &[Trajectory],
    tol: Tolerance,
) -> Result<DecayReport> {
    cfg.check_for(plant)?;
    let mut rep = DecayReport { points: 0, margin: f64::INFINITY, witness_t: None, witness_state: Vec::new(), passed: true };
    for tr in trajs {
        for (t, x) in tr.times().iter().zip(tr.states()) {
            if cfg.l > 0.0 && !omega_member(plant, cfg, x) {
                continue;
            }
            rep.points += 1;
            let rhs = -0.5 * plant.dissipation(&x[..plant.n]);
            let lhs = p_rate(plant, cfg.l, x);
            let margin = rhs - lhs;
            if margin < rep.margin {
                rep.margin = margin;
                rep.witness_t = Some(*t);
                rep.witness_state = x.clone();
            }
            if !tol.passes(lhs, rhs) {
                rep.passed = false;
            }
        }
    }
    if rep.points == 0 {
        rep.margin = 0.0;
    }
    Ok(rep)
}

/// Convergence times of the classical loop for a sequence of initial
/// parameter errors at fixed `y₀`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonUniformityReport {
    pub y0: f64,
    pub epsilon: f64,
    pub horizon: f64,
    pub rows: Vec<NonUniformityRow>,
    /// `T_emp` strictly increasing along the sequence (all converged).
    pub strictly_increasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonUniformityRow {
    pub z0: f64,
    pub t_emp: Option<f64>,
    pub peak_output: f64,
}

pub const DEFAULT_Z0_SEQUENCE: [f64; 4] = [-2.0, -4.0, -6.0, -8.0];

/// Scalar plants only: runs the loop of `cfg` (normally `L = 0`) from
/// `(y₀, z₀)` for each `z₀`. Growth of `T_emp` with `|z₀|` illustrates that
/// convergence is not uniform in the initial state; it is not a proof.
pub fn nonuniformity_demo(
    plant: &AdaptivePlant,
    cfg: &AdaptiveConfig,
    y0: f64,
    z0s: &[f64],
    epsilon: f64,
    integ: &IntegratorConfig,
) -> Result<NonUniformityReport> {
    if plant.n != 1 || plant.p != 1 {
        return Err(Error::InvalidConfig("non-uniformity demo needs a scalar plant".into()));
    }
    let sys = closed_loop(plant, cfg)?;
    let rows = z0s
        .par_iter()
        .map(|&z0| -> Result<NonUniformityRow> {
            let tr = integrate_ode(&sys, &[y0, z0], integ)?;
            let peak = tr.output_norms().into_iter().fold(0.0, f64::max);
            Ok(NonUniformityRow { z0, t_emp: empirical_conv_time(&tr, epsilon)?, peak_output: peak })
        })
        .collect::<Result<Vec<_>>>()?;
    let strictly_increasing = rows.iter().all(|r| r.t_emp.is_some())
        && rows.windows(2).all(|w| w[1].t_emp.unwrap_or(f64::NAN) > w[0].t_emp.unwrap_or(f64::NAN));
    Ok(NonUniformityReport { y0, epsilon, horizon: integ.t_final, rows, strictly_increasing })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo() -> (AdaptivePlant, AdaptiveConfig) {
        (AdaptivePlant::scalar_demo(), AdaptiveConfig::new(1.0, 2.0).unwrap())
    }

    #[test]
    fn control_laws_by_hand() {
        let (pl, cfg) = demo();
        let (u, th) = control_basic(&pl, &cfg, &[1.0], &[0.0]);
        assert_eq!((u, th), (-1.0, vec![1.0]));
        let (u, th) = control_redesigned(&pl, &cfg, &[1.0], &[0.0]);
        assert_eq!((u, th), (-3.0, vec![1.0]));
        assert_eq!(control_redesigned(&pl, &cfg, &[0.0], &[0.7]).0, 0.0);
        let zero_l = AdaptiveConfig::new(1.0, 0.0).unwrap();
        assert_eq!(control_redesigned(&pl, &zero_l, &[0.4], &[0.3]), control_basic(&pl, &zero_l, &[0.4], &[0.3]));
    }

    #[test]
    fn certainty_equivalence() {
        let (pl, _) = demo();
        let cfg = AdaptiveConfig::new(1.0, 0.0).unwrap().with_theta(vec![0.8]).with_theta_hat0(vec![0.8]);
        let sys = plant_loop(&pl, &cfg).unwrap();
        let dx = sys.eval_field(&[0.5, 0.8]).unwrap();
        assert!((dx[0] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn closed_loop_by_hand() {
        let (pl, cfg) = demo();
        let sys = closed_loop(&pl, &cfg).unwrap();
        let (y, z) = (0.7, -0.3);
        let dx = sys.eval_field(&[y, z]).unwrap();
        assert!((dx[0] - (-3.0 * y - y * z)).abs() < 1e-15);
        assert!((dx[1] - y * y).abs() < 1e-15);
        assert_eq!(sys.eval_field(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        // θ does not enter the error-coordinate loop
        let other = closed_loop(&pl, &cfg.clone().with_theta(vec![-5.0])).unwrap();
        assert_eq!(other.eval_field(&[y, z]).unwrap(), dx);
    }

    #[test]
    fn omega_by_hand() {
        let (pl, cfg) = demo();
        assert!(omega_member(&pl, &cfg, &[1.0, 1.0]));
        assert!(omega_member(&pl, &cfg, &[0.0, 0.0]));
        assert!(!omega_member(&pl, &cfg, &[2.0, 2.0]));
    }

    #[test]
    fn assumptions_hold_exactly() {
        let rep = AdaptivePlant::scalar_demo().check_assumptions(3.0, 101, 0.0).unwrap();
        assert!(rep.passed());
        assert_eq!(rep.stabilizability_margin, 0.0);
        assert_eq!(rep.regressor_margin, 0.0);
    }

    #[test]
    fn classical_law_has_no_certificate() {
        let pl = AdaptivePlant::scalar_demo();
        assert!(thm3_certificate(&pl, &AdaptiveConfig::new(1.0, 0.0).unwrap()).is_err());
        let cert = thm3_certificate(&pl, &AdaptiveConfig::new(1.0, 2.0).unwrap()).unwrap();
        assert_eq!(cert.v().unwrap().closed_form_derivative(&[1.0, 0.5]), Some(-3.0));
        assert_eq!(cert.w().closed_form_derivative(&[1.0, 0.5]), Some(-3.5));
    }
}
