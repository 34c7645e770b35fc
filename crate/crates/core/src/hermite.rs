//! Cubic Hermite interpolation on a single interval.

/// Value of the cubic Hermite interpolant on `[t0, t1]` through `(y0, d0)` and `(y1, d1)`.
#[inline]
pub(crate) fn eval(t0: f64, t1: f64, y0: f64, y1: f64, d0: f64, d1: f64, t: f64) -> f64 {
    let h = t1 - t0;
    let u = (t - t0) / h;
    let u2 = u * u;
    let u3 = u2 * u;
    let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
    let h10 = u3 - 2.0 * u2 + u;
    let h01 = -2.0 * u3 + 3.0 * u2;
    let h11 = u3 - u2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

/// Time derivative of [`eval`].
#[inline]
pub(crate) fn derivative(t0: f64, t1: f64, y0: f64, y1: f64, d0: f64, d1: f64, t: f64) -> f64 {
    let h = t1 - t0;
    let u = (t - t0) / h;
    let u2 = u * u;
    let dh00 = 6.0 * u2 - 6.0 * u;
    let dh10 = 3.0 * u2 - 4.0 * u + 1.0;
    let dh01 = -6.0 * u2 + 6.0 * u;
    let dh11 = 3.0 * u2 - 2.0 * u;
    (dh00 * y0 + dh01 * y1) / h + dh10 * d0 + dh11 * d1
}

/// Vector form of [`eval`], writing into `out`.
pub(crate) fn eval_into(
    t0: f64,
    t1: f64,
    y0: &[f64],
    y1: &[f64],
    d0: &[f64],
    d1: &[f64],
    t: f64,
    out: &mut Vec<f64>,
) {
    out.clear();
    out.extend((0..y0.len()).map(|i| eval(t0, t1, y0[i], y1[i], d0[i], d1[i], t)));
}

/// Index `i` of the segment `[knots[i], knots[i+1]]` containing `t` (clamped to the ends).
pub(crate) fn segment(knots: &[f64], t: f64) -> usize {
    debug_assert!(knots.len() >= 2);
    let i = knots.partition_point(|&k| k <= t);
    i.saturating_sub(1).min(knots.len() - 2)
}

// Gauss–Legendre nodes and weights on [-1, 1], five points.
const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Five-point Gauss–Legendre rule on `[a, b]`. Exact for polynomials of degree ≤ 9.
pub(crate) fn gauss_legendre(a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GL_NODES
        .iter()
        .zip(GL_WEIGHTS.iter())
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// `∫_a^b f(τ, x(τ)) dτ` for the piecewise Hermite curve through
/// `(knots, values, slopes)`, walking the pieces in order (5-point rule per piece).
pub(crate) fn integrate_pieces(
    knots: &[f64],
    values: &[Vec<f64>],
    slopes: &[Vec<f64>],
    a: f64,
    b: f64,
    f: &mut dyn FnMut(f64, &[f64]) -> f64,
) -> f64 {
    if !(b > a) || knots.len() < 2 {
        return 0.0;
    }
    let mut buf = Vec::with_capacity(values[0].len());
    let mut total = 0.0;
    let mut i = segment(knots, a);
    loop {
        let lo = a.max(knots[i]);
        let hi = if i + 2 == knots.len() { b } else { b.min(knots[i + 1]) };
        if hi > lo {
            total += gauss_legendre(lo, hi, |t| {
                eval_into(knots[i], knots[i + 1], &values[i], &values[i + 1], &slopes[i], &slopes[i + 1], t, &mut buf);
                f(t, &buf)
            });
        }
        if hi >= b || i + 2 == knots.len() {
            return total;
        }
        i += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubics_exactly() {
        let p = |t: f64| 1.0 - 2.0 * t + 0.5 * t * t + 0.25 * t * t * t;
        let dp = |t: f64| -2.0 + t + 0.75 * t * t;
        let (a, b) = (0.3, 1.7);
        for k in 0..=10 {
            let t = a + (b - a) * k as f64 / 10.0;
            let v = eval(a, b, p(a), p(b), dp(a), dp(b), t);
            assert!((v - p(t)).abs() < 1e-14);
            let d = derivative(a, b, p(a), p(b), dp(a), dp(b), t);
            assert!((d - dp(t)).abs() < 1e-13);
        }
    }

    #[test]
    fn gauss_legendre_degree_nine() {
        let v = gauss_legendre(-1.0, 2.0, |x| x.powi(9) - 3.0 * x.powi(4));
        let exact = (2f64.powi(10) - 1.0) / 10.0 - 3.0 * (2f64.powi(5) + 1.0) / 5.0;
        assert!((v - exact).abs() < 1e-11);
    }

    #[test]
    fn segment_lookup() {
        let k = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(segment(&k, 0.0), 0);
        assert_eq!(segment(&k, 0.5), 0);
        assert_eq!(segment(&k, 1.0), 1);
        assert_eq!(segment(&k, 3.0), 2);
        assert_eq!(segment(&k, -1.0), 0);
    }
}
