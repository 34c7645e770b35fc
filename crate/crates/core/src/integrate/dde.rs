use super::{Dense, DenseWindow, IntegratorConfig, Trajectory, BLOW_UP_NORM};
use crate::error::{Error, Result};
use crate::systems::{euclid, DelaySystem, History, HistoryQuery};

/// Method of steps: fixed-step RK4 with the field evaluated on the segment
/// reconstructed from the initial history and the dense past solution.
///
/// Because `dde_step` divides `r`, every delayed argument `t + c·h − r` of an
/// RK stage lies at or before the current knot, and the derivative jumps at
/// multiples of `r` fall on knots. Values strictly inside the current step
/// (only reached by fields that look at `s ∈ (−h, 0)`) are linearly
/// interpolated between the knot and the stage value.
pub fn integrate_dde(sys: &DelaySystem, h0: &History, cfg: &IntegratorConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let r = sys.delay();
    if h0.dim() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), got: h0.dim() });
    }
    if (h0.horizon() - r).abs() > 1e-12 * r {
        return Err(Error::InvalidConfig(format!("history horizon {} differs from delay {r}", h0.horizon())));
    }
    if !sys.in_domain(h0) {
        return Err(Error::InvalidConfig(format!("initial history is outside the domain of {}", sys.name())));
    }
    let per_delay = cfg.steps_per_delay(r)?;
    let step = r / per_delay as f64;
    let tf = cfg.t_final;
    let n_steps = ((tf / step) - 1e-9).ceil().max(1.0) as usize;
    let field = sys.field_fn().clone();
    let n = sys.dim();

    let eval = |view: &dyn HistoryQuery, t: f64| -> Result<Vec<f64>> {
        let v = field(view);
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::BlowUp { t });
        }
        Ok(v)
    };

    let mut traj = Dense::new(Some(h0.clone()));
    let mut exits = Vec::new();
    let x0 = h0.current();
    let f0 = eval(h0, 0.0)?;
    traj.push_knot(0.0, x0, f0);

    for k in 0..n_steps {
        let tn = k as f64 * step;
        let t_next = if k + 1 == n_steps { tf } else { (k + 1) as f64 * step };
        let h = t_next - tn;
        let xn = traj.states[k].clone();
        let k1 = traj.slopes[k].clone();
        let axpy = |a: f64, v: &[f64]| -> Vec<f64> { (0..n).map(|i| xn[i] + a * v[i]).collect() };

        let y2 = axpy(0.5 * h, &k1);
        let k2 = eval(&StageView::new(&traj, tn, &xn, tn + 0.5 * h, &y2, r), tn + 0.5 * h)?;
        let y3 = axpy(0.5 * h, &k2);
        let k3 = eval(&StageView::new(&traj, tn, &xn, tn + 0.5 * h, &y3, r), tn + 0.5 * h)?;
        let y4 = axpy(h, &k3);
        let k4 = eval(&StageView::new(&traj, tn, &xn, t_next, &y4, r), t_next)?;
        let x_new: Vec<f64> =
            (0..n).map(|i| xn[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect();
        if x_new.iter().any(|v| !v.is_finite()) || euclid(&x_new) > BLOW_UP_NORM {
            return Err(Error::BlowUp { t: t_next });
        }
        let f_new = eval(&StageView::new(&traj, tn, &xn, t_next, &x_new, r), t_next)?;
        traj.push_knot(t_next, x_new, f_new);
        if sys.has_domain() && !sys.in_domain(&DenseWindow { dense: &traj, t: t_next, r }) {
            exits.push(t_next);
        }
    }
    Ok(Trajectory::from_dde(sys.name(), traj, sys.output_fn().clone(), exits))
}

/// Segment at an RK stage time `ts ∈ (tn, tn + h]`.
struct StageView<'a> {
    traj: &'a Dense,
    tn: f64,
    xn: &'a [f64],
    ts: f64,
    ys: &'a [f64],
    r: f64,
}

impl<'a> StageView<'a> {
    fn new(traj: &'a Dense, tn: f64, xn: &'a [f64], ts: f64, ys: &'a [f64], r: f64) -> Self {
        Self { traj, tn, xn, ts, ys, r }
    }
}

impl HistoryQuery for StageView<'_> {
    fn horizon(&self) -> f64 {
        self.r
    }

    fn dim(&self) -> usize {
        self.xn.len()
    }

    fn at_into(&self, s: f64, out: &mut Vec<f64>) {
        let s = s.clamp(-self.r, 0.0);
        let tau = self.ts + s;
        if s == 0.0 {
            out.clear();
            out.extend_from_slice(self.ys);
        } else if tau <= self.tn {
            self.traj.extended_into(tau, out);
        } else {
            let w = (tau - self.tn) / (self.ts - self.tn);
            out.clear();
            out.extend(self.xn.iter().zip(self.ys).map(|(a, b)| a + w * (b - a)));
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.traj.breakpoints(self.ts, self.r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lag() -> DelaySystem {
        DelaySystem::new("lag", 1, 1, 1.0, |h: &dyn HistoryQuery| vec![-h.at(-1.0)[0]], |h: &dyn HistoryQuery| {
            vec![h.current()[0]]
        })
        .unwrap()
    }

    #[test]
    fn first_interval_is_linear() {
        let h0 = History::constant(1.0, &[1.0]).unwrap();
        let cfg = IntegratorConfig::default().with_t_final(1.0).with_dde_step(0.1);
        let tr = integrate_dde(&lag(), &h0, &cfg).unwrap();
        for (t, x) in tr.times().iter().zip(tr.states()) {
            assert!((x[0] - (1.0 - t)).abs() < 1e-14, "t = {t}");
        }
        assert!((tr.dense_eval(0.55).unwrap()[0] - 0.45).abs() < 1e-14);
    }

    #[test]
    fn second_interval_is_quadratic() {
        // x = 1 - t + (t-1)^2/2 on [1, 2]
        let h0 = History::constant(1.0, &[1.0]).unwrap();
        let cfg = IntegratorConfig::default().with_t_final(2.0).with_dde_step(0.05);
        let tr = integrate_dde(&lag(), &h0, &cfg).unwrap();
        let x = tr.dense_eval(1.5).unwrap()[0];
        assert!((x - (1.0 - 1.5 + 0.125)).abs() < 1e-13, "{x}");
    }

    /// Breakpoint-based quadrature only, to cross-check the segment walk.
    struct Generic<'a>(&'a dyn HistoryQuery);

    impl HistoryQuery for Generic<'_> {
        fn horizon(&self) -> f64 {
            self.0.horizon()
        }
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn at_into(&self, s: f64, out: &mut Vec<f64>) {
            self.0.at_into(s, out)
        }
        fn breakpoints(&self) -> Vec<f64> {
            self.0.breakpoints()
        }
    }

    #[test]
    fn window_integral_matches_breakpoint_quadrature() {
        let h0 = History::cubic(1.0, &[[0.3, -0.2, 0.5, 0.1]]).unwrap();
        let cfg = IntegratorConfig::default().with_t_final(3.0).with_dde_step(0.05);
        let tr = integrate_dde(&lag(), &h0, &cfg).unwrap();
        let f = |s: f64, x: &[f64]| s.exp() * x[0] * x[0] + x[0];
        for t in [0.0, 0.37, 1.0, 1.234, 2.5, 3.0] {
            let w = tr.history_at(t).unwrap();
            let fast = crate::systems::integrate_history(&w, f);
            let slow = crate::systems::integrate_history(&Generic(&w), f);
            assert!((fast - slow).abs() < 1e-13, "t = {t}: {fast} vs {slow}");
        }
        let fast = crate::systems::integrate_history(&h0, f);
        let slow = crate::systems::integrate_history(&Generic(&h0), f);
        assert!((fast - slow).abs() < 1e-15);
    }

    #[test]
    fn history_window_reads_prehistory() {
        let h0 = History::linear(1.0, &[2.0], &[1.0]).unwrap();
        let cfg = IntegratorConfig::default().with_t_final(1.0).with_dde_step(0.25);
        let tr = integrate_dde(&lag(), &h0, &cfg).unwrap();
        let w = tr.history_at(0.5).unwrap();
        // s = -0.75 maps to τ = -0.25 in the initial history: 1 - (-0.25) = 1.25
        assert!((w.at(-0.75)[0] - 1.25).abs() < 1e-14);
        assert_eq!(w.at(0.0), tr.dense_eval(0.5).unwrap().to_vec());
        let bp = w.breakpoints();
        assert_eq!(bp.first(), Some(&-1.0));
        assert_eq!(bp.last(), Some(&0.0));
    }

    #[test]
    fn rejects_non_dividing_step() {
        let h0 = History::constant(1.0, &[1.0]).unwrap();
        let cfg = IntegratorConfig::default().with_dde_step(0.3);
        assert!(integrate_dde(&lag(), &h0, &cfg).is_err());
    }
}
