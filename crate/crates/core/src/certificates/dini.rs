use super::ScalarField;
use crate::error::{Error, Result};
use crate::integrate::Trajectory;
use crate::systems::HistoryQuery;

/// Forward-difference steps. Max over the list is a conservative upper-right
/// Dini estimate; the O(h) bias of the largest step sets the accuracy floor.
pub const DEFAULT_DINI_STEPS: [f64; 3] = [1e-5, 1e-6, 1e-7];

/// How a scalar field reads a trajectory at time `t`: the point value for
/// ODEs, the segment `x_t` for delay systems.
pub trait Observe<A: ?Sized> {
    fn observe<R>(&self, t: f64, f: impl FnOnce(&A) -> R) -> R;
}

impl Observe<[f64]> for Trajectory {
    fn observe<R>(&self, t: f64, f: impl FnOnce(&[f64]) -> R) -> R {
        let mut x = Vec::with_capacity(self.dim());
        self.eval_into(t, &mut x);
        f(&x)
    }
}

impl Observe<dyn HistoryQuery> for Trajectory {
    fn observe<R>(&self, t: f64, f: impl FnOnce(&(dyn HistoryQuery + 'static)) -> R) -> R {
        f(&self.window(t))
    }
}

/// `max_h (F(φ(t+h)) − F(φ(t))) / h` over `h_list`.
pub fn dini_derivative<A: ?Sized>(
    field: &ScalarField<A>,
    traj: &Trajectory,
    t: f64,
    h_list: &[f64],
) -> Result<f64>
where
    Trajectory: Observe<A>,
{
    forward_quotients(field, traj, t, h_list).map(|(hi, _)| hi)
}

/// `(max, min)` of the forward difference quotients.
pub(crate) fn forward_quotients<A: ?Sized>(
    field: &ScalarField<A>,
    traj: &Trajectory,
    t: f64,
    h_list: &[f64],
) -> Result<(f64, f64)>
where
    Trajectory: Observe<A>,
{
    let h_max = h_list.iter().copied().fold(f64::NAN, f64::max);
    if h_list.is_empty() || h_list.iter().any(|h| !(*h > 0.0)) {
        return Err(Error::InvalidConfig("Dini steps must be positive and non-empty".into()));
    }
    if !(t >= 0.0) || t + h_max > traj.t_final() {
        return Err(Error::OutOfRange { t: t + h_max, t_final: traj.t_final() });
    }
    let f0 = traj.observe(t, |a| field.eval(a));
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    for &h in h_list {
        let q = (traj.observe(t + h, |a| field.eval(a)) - f0) / h;
        hi = hi.max(q);
        lo = lo.min(q);
    }
    Ok((hi, lo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::{integrate_ode, IntegratorConfig};
    use crate::systems::OdeSystem;

    #[test]
    fn half_square_on_decay() {
        let sys = OdeSystem::new("decay", 1, 1, |x| vec![-x[0]], |x| vec![x[0]]);
        let tr = integrate_ode(&sys, &[1.0], &IntegratorConfig::default().with_t_final(1.0)).unwrap();
        let w = ScalarField::<[f64]>::new("W", |x| 0.5 * x[0] * x[0]);
        let d = dini_derivative(&w, &tr, 0.0, &DEFAULT_DINI_STEPS).unwrap();
        assert!((d + 1.0).abs() < 1e-3, "{d}");
        let c = ScalarField::<[f64]>::new("one", |_| 1.0);
        assert_eq!(dini_derivative(&c, &tr, 0.3, &DEFAULT_DINI_STEPS).unwrap(), 0.0);
        assert!(dini_derivative(&c, &tr, 1.0, &DEFAULT_DINI_STEPS).is_err());
    }
}
