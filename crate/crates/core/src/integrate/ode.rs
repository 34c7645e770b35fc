use nalgebra::{DMatrix, DVector};

use super::{Dense, IntegratorConfig, Trajectory, BLOW_UP_NORM};
use crate::error::{Error, Result};
use crate::systems::{euclid, OdeSystem};

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const STIFF_RATIO: f64 = 3.25;
const STIFF_HITS: u32 = 15;
const NONSTIFF_RESET: u32 = 6;
const MAX_STEPS: usize = 20_000_000;

// ROS2: γ = 1 + 1/√2.
const ROS_GAMMA: f64 = 1.707_106_781_186_547_5;

/// Integrates `ẋ = f(x)` from `x0` over `[0, cfg.t_final]`.
///
/// Domain exits are recorded on the trajectory, not treated as errors.
pub fn integrate_ode(sys: &OdeSystem, x0: &[f64], cfg: &IntegratorConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if x0.len() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), got: x0.len() });
    }
    if let Some(i) = x0.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "initial state".into(), coordinate: i });
    }
    if !sys.in_domain(x0) {
        return Err(Error::InvalidConfig(format!("initial state {x0:?} is outside the domain of {}", sys.name())));
    }
    let f = sys.field_fn().clone();
    let eval = |x: &[f64], t: f64| -> Result<Vec<f64>> {
        let v = f(x);
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::BlowUp { t });
        }
        Ok(v)
    };

    let mut traj = Dense::new(None);
    let mut exits = Vec::new();
    let mut stiff_switch = None;
    let mut solver = Solver::new(sys.dim(), cfg);
    let mut t = 0.0;
    let mut x = x0.to_vec();
    let mut fx = eval(&x, t)?;
    traj.push_knot(t, x.clone(), fx.clone());
    let tf = cfg.t_final;
    let mut h = initial_step(&eval, &x, &fx, cfg)?;
    let mut steps = 0usize;

    while t < tf {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(Error::StepUnderflow { t });
        }
        let last = t + h >= tf * (1.0 - 1e-14) || t + h >= tf;
        let h_try = if last { tf - t } else { h };
        let outcome = if solver.stiff {
            solver.ros2_step(&eval, t, &x, &fx, h_try)?
        } else {
            solver.dopri_step(&eval, t, &x, &fx, h_try)?
        };
        match outcome {
            Step::Accepted { x_new, f_new, h_next } => {
                t = if last { tf } else { t + h_try };
                x = x_new;
                fx = f_new;
                if euclid(&x) > BLOW_UP_NORM {
                    return Err(Error::BlowUp { t });
                }
                if !sys.in_domain(&x) {
                    exits.push(t);
                }
                traj.push_knot(t, x.clone(), fx.clone());
                if solver.stiff && stiff_switch.is_none() {
                    stiff_switch = Some(t);
                }
                h = h_next.min(cfg.max_step);
            }
            Step::Rejected { h_next } => {
                h = h_next;
            }
        }
        if h < 1e-14 * t.abs().max(1.0) {
            if solver.stiff {
                return Err(Error::StepUnderflow { t });
            }
            solver.switch_to_stiff();
            if stiff_switch.is_none() {
                stiff_switch = Some(t);
            }
            h = (1e-6 * t.abs().max(1.0)).min(cfg.max_step);
        }
    }
    Ok(Trajectory::from_ode(sys.name(), traj, sys.output_fn().clone(), exits, stiff_switch))
}

enum Step {
    Accepted { x_new: Vec<f64>, f_new: Vec<f64>, h_next: f64 },
    Rejected { h_next: f64 },
}

struct Solver {
    n: usize,
    rtol: f64,
    atol: f64,
    fac_old: f64,
    stiff: bool,
    stiff_hits: u32,
    nonstiff_run: u32,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
}

impl Solver {
    fn new(n: usize, cfg: &IntegratorConfig) -> Self {
        Self {
            n,
            rtol: cfg.rel_tol,
            atol: cfg.abs_tol,
            fac_old: 1e-4,
            stiff: false,
            stiff_hits: 0,
            nonstiff_run: 0,
            k: Default::default(),
            tmp: vec![0.0; n],
        }
    }

    fn switch_to_stiff(&mut self) {
        self.stiff = true;
    }

    fn err_norm(&self, err: &[f64], x: &[f64], x_new: &[f64]) -> f64 {
        let s: f64 = (0..self.n)
            .map(|i| {
                let sc = self.atol + self.rtol * x[i].abs().max(x_new[i].abs());
                let e = err[i] / sc;
                e * e
            })
            .sum();
        (s / self.n as f64).sqrt()
    }

    fn stage(&mut self, x: &[f64], h: f64, coeffs: &[(usize, f64)]) {
        for i in 0..self.n {
            let mut acc = 0.0;
            for &(j, a) in coeffs {
                acc += a * self.k[j][i];
            }
            self.tmp[i] = x[i] + h * acc;
        }
    }

    fn dopri_step<F>(&mut self, eval: &F, t: f64, x: &[f64], fx: &[f64], h: f64) -> Result<Step>
    where
        F: Fn(&[f64], f64) -> Result<Vec<f64>>,
    {
        self.k[0] = fx.to_vec();
        self.stage(x, h, &[(0, A21)]);
        self.k[1] = eval(&self.tmp, t + C2 * h)?;
        self.stage(x, h, &[(0, A31), (1, A32)]);
        self.k[2] = eval(&self.tmp, t + C3 * h)?;
        self.stage(x, h, &[(0, A41), (1, A42), (2, A43)]);
        self.k[3] = eval(&self.tmp, t + C4 * h)?;
        self.stage(x, h, &[(0, A51), (1, A52), (2, A53), (3, A54)]);
        self.k[4] = eval(&self.tmp, t + C5 * h)?;
        self.stage(x, h, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)]);
        let x_stiff = self.tmp.clone();
        self.k[5] = eval(&self.tmp, t + h)?;
        self.stage(x, h, &[(0, A71), (2, A73), (3, A74), (4, A75), (5, A76)]);
        let x_new = self.tmp.clone();
        self.k[6] = eval(&x_new, t + h)?;

        let err: Vec<f64> = (0..self.n)
            .map(|i| {
                h * (E1 * self.k[0][i]
                    + E3 * self.k[2][i]
                    + E4 * self.k[3][i]
                    + E5 * self.k[4][i]
                    + E6 * self.k[5][i]
                    + E7 * self.k[6][i])
            })
            .collect();
        let e = self.err_norm(&err, x, &x_new);
        let expo = 0.2 - BETA * 0.75;
        let fac11 = e.powf(expo);

        if e <= 1.0 {
            let fac = (fac11 / self.fac_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            self.fac_old = e.max(1e-4);
            self.detect_stiffness(h, &x_new, &x_stiff);
            Ok(Step::Accepted { x_new, f_new: self.k[6].clone(), h_next: h / fac })
        } else if e.is_finite() {
            Ok(Step::Rejected { h_next: h / (fac11 / SAFETY).min(1.0 / FAC_MIN) })
        } else {
            Ok(Step::Rejected { h_next: h * FAC_MIN })
        }
    }

    fn detect_stiffness(&mut self, h: f64, x_new: &[f64], x_stiff: &[f64]) {
        let num: f64 = (0..self.n).map(|i| (self.k[6][i] - self.k[5][i]).powi(2)).sum();
        let den: f64 = (0..self.n).map(|i| (x_new[i] - x_stiff[i]).powi(2)).sum();
        if den > 0.0 && h * (num / den).sqrt() > STIFF_RATIO {
            self.nonstiff_run = 0;
            self.stiff_hits += 1;
            if self.stiff_hits >= STIFF_HITS {
                self.stiff = true;
            }
        } else {
            self.nonstiff_run += 1;
            if self.nonstiff_run >= NONSTIFF_RESET {
                self.stiff_hits = 0;
            }
        }
    }

    fn jacobian<F>(&self, eval: &F, t: f64, x: &[f64], fx: &[f64]) -> Result<DMatrix<f64>>
    where
        F: Fn(&[f64], f64) -> Result<Vec<f64>>,
    {
        let mut jac = DMatrix::zeros(self.n, self.n);
        let mut xp = x.to_vec();
        let sqrt_eps = f64::EPSILON.sqrt();
        for j in 0..self.n {
            let d = sqrt_eps * x[j].abs().max(1e-5);
            xp[j] = x[j] + d;
            let fp = eval(&xp, t)?;
            let d = xp[j] - x[j];
            for i in 0..self.n {
                jac[(i, j)] = (fp[i] - fx[i]) / d;
            }
            xp[j] = x[j];
        }
        Ok(jac)
    }

    fn ros2_step<F>(&mut self, eval: &F, t: f64, x: &[f64], fx: &[f64], h: f64) -> Result<Step>
    where
        F: Fn(&[f64], f64) -> Result<Vec<f64>>,
    {
        let jac = self.jacobian(eval, t, x, fx)?;
        let m = DMatrix::identity(self.n, self.n) - jac * (ROS_GAMMA * h);
        let lu = m.lu();
        let k1 = match lu.solve(&DVector::from_column_slice(fx)) {
            Some(v) => v,
            None => return Ok(Step::Rejected { h_next: h * 0.5 }),
        };
        let x1: Vec<f64> = (0..self.n).map(|i| x[i] + h * k1[i]).collect();
        let f1 = match eval(&x1, t + h) {
            Ok(v) => v,
            Err(_) => return Ok(Step::Rejected { h_next: h * 0.25 }),
        };
        let rhs = DVector::from_iterator(self.n, (0..self.n).map(|i| f1[i] - 2.0 * k1[i]));
        let k2 = match lu.solve(&rhs) {
            Some(v) => v,
            None => return Ok(Step::Rejected { h_next: h * 0.5 }),
        };
        let x_new: Vec<f64> = (0..self.n).map(|i| x[i] + h * (1.5 * k1[i] + 0.5 * k2[i])).collect();
        let err: Vec<f64> = (0..self.n).map(|i| 0.5 * h * (k1[i] + k2[i])).collect();
        let e = self.err_norm(&err, x, &x_new);
        if !e.is_finite() {
            return Ok(Step::Rejected { h_next: h * FAC_MIN });
        }
        let fac = (SAFETY * e.max(1e-10).powf(-0.5)).clamp(FAC_MIN, 5.0);
        if e <= 1.0 {
            let f_new = match eval(&x_new, t + h) {
                Ok(v) => v,
                Err(_) => return Ok(Step::Rejected { h_next: h * 0.25 }),
            };
            Ok(Step::Accepted { x_new, f_new, h_next: h * fac })
        } else {
            Ok(Step::Rejected { h_next: h * fac.min(0.9) })
        }
    }
}

/// Starting step from the usual two-evaluation heuristic.
fn initial_step<F>(eval: &F, x: &[f64], fx: &[f64], cfg: &IntegratorConfig) -> Result<f64>
where
    F: Fn(&[f64], f64) -> Result<Vec<f64>>,
{
    let n = x.len() as f64;
    let sc = |i: usize| cfg.abs_tol + cfg.rel_tol * x[i].abs();
    let d0 = (x.iter().enumerate().map(|(i, v)| (v / sc(i)).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (fx.iter().enumerate().map(|(i, v)| (v / sc(i)).powi(2)).sum::<f64>() / n).sqrt();
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(cfg.t_final).min(cfg.max_step);
    let x1: Vec<f64> = x.iter().zip(fx).map(|(a, b)| a + h0 * b).collect();
    let f1 = match eval(&x1, h0) {
        Ok(v) => v,
        Err(_) => return Ok(h0 * 1e-3),
    };
    let d2 = (f1.iter().zip(fx).enumerate().map(|(i, (a, b))| ((a - b) / sc(i)).powi(2)).sum::<f64>() / n).sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    Ok((100.0 * h0).min(h1).min(cfg.t_final).min(cfg.max_step))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay() -> OdeSystem {
        OdeSystem::new("decay", 1, 1, |x| vec![-x[0]], |x| vec![x[0]])
    }

    #[test]
    fn exponential_decay_accuracy() {
        let cfg = IntegratorConfig::default().with_t_final(10.0);
        let tr = integrate_ode(&decay(), &[1.0], &cfg).unwrap();
        let worst = tr
            .times()
            .iter()
            .zip(tr.states())
            .map(|(t, x)| (x[0] - (-t).exp()).abs())
            .fold(0.0, f64::max);
        assert!(worst < 10.0 * cfg.rel_tol, "worst error {worst}");
        assert_eq!(tr.t_final(), 10.0);
        assert!(tr.stiff_switch().is_none());
    }

    #[test]
    fn harmonic_oscillator_energy() {
        let sys = OdeSystem::new("osc", 2, 1, |x| vec![x[1], -x[0]], |x| vec![x[0]]);
        let tr = integrate_ode(&sys, &[1.0, 0.0], &IntegratorConfig::default().with_t_final(20.0)).unwrap();
        let x = tr.dense_eval(20.0).unwrap();
        assert!((x[0] - 20f64.cos()).abs() < 1e-6);
    }

    #[test]
    fn stiff_problem_switches_method() {
        // y' = -1e6 (y - cos t)
        let sys = OdeSystem::new("stiff", 2, 1, |x| vec![-1e6 * (x[0] - x[1].cos()), 1.0], |x| vec![x[0]]);
        let tr = integrate_ode(&sys, &[0.0, 0.0], &IntegratorConfig::default().with_t_final(5.0)).unwrap();
        assert!(tr.stiff_switch().is_some());
        let x = tr.dense_eval(5.0).unwrap();
        assert!((x[0] - 5f64.cos()).abs() < 1e-4, "{}", x[0]);
        assert!(tr.len() < 200_000);
    }

    #[test]
    fn blow_up_is_reported() {
        let sys = OdeSystem::new("quad", 1, 1, |x| vec![x[0] * x[0]], |x| vec![x[0]]);
        match integrate_ode(&sys, &[1.0], &IntegratorConfig::default().with_t_final(2.0)) {
            Err(Error::BlowUp { t }) | Err(Error::StepUnderflow { t }) => assert!(t < 1.0 + 1e-3),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn zero_is_an_equilibrium() {
        let tr = integrate_ode(&decay(), &[0.0], &IntegratorConfig::default()).unwrap();
        assert!(tr.states().iter().all(|x| x[0] == 0.0));
    }
}
