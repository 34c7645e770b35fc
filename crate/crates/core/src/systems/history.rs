use serde::Serialize;

use crate::error::{Error, Result};
use crate::hermite;

/// Read access to a state segment `x_t : [-r, 0] → ℝⁿ` of a delay system.
///
/// Implemented by stored initial histories and by windows into a computed
/// solution, so functionals and delay vector fields never care which one they see.
pub trait HistoryQuery: Sync {
    /// Delay horizon `r`.
    fn horizon(&self) -> f64;

    fn dim(&self) -> usize;

    /// Writes `x(s)` for `s ∈ [-r, 0]` into `out`.
    fn at_into(&self, s: f64, out: &mut Vec<f64>);

    /// Points of `[-r, 0]` (sorted, including both ends) between which the
    /// segment is a single cubic polynomial.
    fn breakpoints(&self) -> Vec<f64>;

    fn at(&self, s: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        self.at_into(s, &mut out);
        out
    }

    /// `x(0)`, the current point value.
    fn current(&self) -> Vec<f64> {
        self.at(0.0)
    }

    /// `∫_{-r}^0 f(s, x(s)) ds`. The default integrates each polynomial piece
    /// between [`breakpoints`](Self::breakpoints) with five-point Gauss–Legendre;
    /// stored segments override it with a walk that skips the per-node lookup.
    fn integrate(&self, f: &mut dyn FnMut(f64, &[f64]) -> f64) -> f64 {
        let bp = self.breakpoints();
        let mut buf = Vec::with_capacity(self.dim());
        let mut total = 0.0;
        for w in bp.windows(2) {
            if w[1] > w[0] {
                total += hermite::gauss_legendre(w[0], w[1], |s| {
                    self.at_into(s, &mut buf);
                    f(s, &buf)
                });
            }
        }
        total
    }
}

/// `∫_{-r}^0 f(s, x(s)) ds`, integrating each polynomial piece with Gauss–Legendre.
pub fn integrate_history(h: &dyn HistoryQuery, mut f: impl FnMut(f64, &[f64]) -> f64) -> f64 {
    h.integrate(&mut f)
}

/// Sup norm `max_{s∈[-r,0]} |x(s)|` estimated on breakpoints plus a 256-interval grid.
pub fn sup_norm(h: &dyn HistoryQuery) -> f64 {
    let r = h.horizon();
    let mut buf = Vec::with_capacity(h.dim());
    let mut best: f64 = 0.0;
    let mut visit = |s: f64, buf: &mut Vec<f64>| {
        h.at_into(s, buf);
        let n = buf.iter().map(|v| v * v).sum::<f64>().sqrt();
        best = best.max(n);
    };
    for s in h.breakpoints() {
        visit(s, &mut buf);
    }
    for k in 0..=256 {
        visit(-r + r * k as f64 / 256.0, &mut buf);
    }
    best
}

/// A stored piecewise-cubic Hermite history on `[-r, 0]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct History {
    r: f64,
    knots: Vec<f64>,
    values: Vec<Vec<f64>>,
    slopes: Vec<Vec<f64>>,
}

impl History {
    pub fn from_knots(
        r: f64,
        knots: Vec<f64>,
        values: Vec<Vec<f64>>,
        slopes: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::InvalidConfig(format!("delay horizon must be > 0, got {r}")));
        }
        if knots.len() < 2 || knots.len() != values.len() || knots.len() != slopes.len() {
            return Err(Error::InvalidConfig("history needs ≥ 2 knots with values and slopes".into()));
        }
        let tol = 1e-12 * r;
        if (knots[0] + r).abs() > tol || knots[knots.len() - 1].abs() > tol {
            return Err(Error::InvalidConfig("history knots must span [-r, 0]".into()));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig("history knots must be strictly increasing".into()));
        }
        let n = values[0].len();
        for (v, d) in values.iter().zip(&slopes) {
            if v.len() != n || d.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: v.len().min(d.len()) });
            }
            if let Some(i) = v.iter().chain(d).position(|x| !x.is_finite()) {
                return Err(Error::NonFinite { what: "history".into(), coordinate: i % n });
            }
        }
        let mut knots = knots;
        knots[0] = -r;
        let last = knots.len() - 1;
        knots[last] = 0.0;
        Ok(Self { r, knots, values, slopes })
    }

    pub fn constant(r: f64, value: &[f64]) -> Result<Self> {
        let zero = vec![0.0; value.len()];
        Self::from_knots(r, vec![-r, 0.0], vec![value.to_vec(), value.to_vec()], vec![zero.clone(), zero])
    }

    pub fn zero(r: f64, n: usize) -> Self {
        Self::constant(r, &vec![0.0; n]).expect("zero history is valid")
    }

    /// Straight line from `at_minus_r` (at `s = -r`) to `at_zero`.
    pub fn linear(r: f64, at_minus_r: &[f64], at_zero: &[f64]) -> Result<Self> {
        if at_minus_r.len() != at_zero.len() {
            return Err(Error::DimensionMismatch { expected: at_zero.len(), got: at_minus_r.len() });
        }
        let slope: Vec<f64> = at_zero.iter().zip(at_minus_r).map(|(b, a)| (b - a) / r).collect();
        Self::from_knots(
            r,
            vec![-r, 0.0],
            vec![at_minus_r.to_vec(), at_zero.to_vec()],
            vec![slope.clone(), slope],
        )
    }

    /// Component `i` is `c0 + c1·u + c2·u² + c3·u³` with `u = s/r ∈ [-1, 0]`.
    pub fn cubic(r: f64, coeffs: &[[f64; 4]]) -> Result<Self> {
        let p = |c: &[f64; 4], u: f64| c[0] + u * (c[1] + u * (c[2] + u * c[3]));
        let dp = |c: &[f64; 4], u: f64| (c[1] + u * (2.0 * c[2] + 3.0 * u * c[3])) / r;
        let v0: Vec<f64> = coeffs.iter().map(|c| p(c, -1.0)).collect();
        let v1: Vec<f64> = coeffs.iter().map(|c| p(c, 0.0)).collect();
        let d0: Vec<f64> = coeffs.iter().map(|c| dp(c, -1.0)).collect();
        let d1: Vec<f64> = coeffs.iter().map(|c| dp(c, 0.0)).collect();
        Self::from_knots(r, vec![-r, 0.0], vec![v0, v1], vec![d0, d1])
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let scale = |rows: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            rows.iter().map(|v| v.iter().map(|x| x * factor).collect()).collect()
        };
        Self { r: self.r, knots: self.knots.clone(), values: scale(&self.values), slopes: scale(&self.slopes) }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn slopes(&self) -> &[Vec<f64>] {
        &self.slopes
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(self)
    }
}

impl HistoryQuery for History {
    fn horizon(&self) -> f64 {
        self.r
    }

    fn dim(&self) -> usize {
        self.values[0].len()
    }

    fn at_into(&self, s: f64, out: &mut Vec<f64>) {
        let s = s.clamp(-self.r, 0.0);
        let i = hermite::segment(&self.knots, s);
        hermite::eval_into(
            self.knots[i],
            self.knots[i + 1],
            &self.values[i],
            &self.values[i + 1],
            &self.slopes[i],
            &self.slopes[i + 1],
            s,
            out,
        );
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.knots.clone()
    }

    fn integrate(&self, f: &mut dyn FnMut(f64, &[f64]) -> f64) -> f64 {
        hermite::integrate_pieces(&self.knots, &self.values, &self.slopes, -self.r, 0.0, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_history_is_exact() {
        let h = History::cubic(2.0, &[[1.0, -0.5, 0.25, 0.75]]).unwrap();
        for k in 0..=20 {
            let s = -2.0 + 0.1 * k as f64;
            let u = s / 2.0;
            let exact = 1.0 - 0.5 * u + 0.25 * u * u + 0.75 * u * u * u;
            assert!((h.at(s)[0] - exact).abs() < 1e-14);
        }
    }

    #[test]
    fn integral_of_linear_history() {
        let h = History::linear(1.0, &[0.0], &[1.0]).unwrap();
        // x(s) = 1 + s on [-1, 0]; ∫ x² = 1/3
        let v = integrate_history(&h, |_, x| x[0] * x[0]);
        assert!((v - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn sup_norm_of_constant() {
        let h = History::constant(1.0, &[3.0, 4.0]).unwrap();
        assert!((h.sup_norm() - 5.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_horizon() {
        assert!(History::constant(0.0, &[1.0]).is_err());
        assert!(History::constant(1.0, &[f64::NAN]).is_err());
    }
}
