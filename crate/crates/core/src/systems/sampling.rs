use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::{euclid, DelaySystem, History, OdeSystem, StateVec};
use crate::error::{Error, Result};

const MAX_DRAWS_BEFORE_VERDICT: usize = 1_000_000;
const MIN_ACCEPT_RATE: f64 = 1e-3;
const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Radical inverse of `index` in `base` (van der Corput / Halton coordinate).
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while index > 0 {
        f /= b;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// Halton points of the cube `[-radius, radius]^n` restricted to the open ball `|x| < radius`.
pub fn halton_ball(n: usize, radius: f64) -> impl Iterator<Item = Vec<f64>> {
    assert!(n <= PRIMES.len(), "quasi-random sampling supports n ≤ {}", PRIMES.len());
    (0u64..)
        .map(move |index| (0..n).map(|d| radius * (2.0 * halton(index, PRIMES[d]) - 1.0)).collect::<Vec<f64>>())
        .filter(move |x| euclid(x) < radius)
}

/// The first `count` points of [`halton_ball`].
pub fn quasi_random_ball(n: usize, radius: f64, count: usize) -> Vec<Vec<f64>> {
    halton_ball(n, radius).take(count).collect()
}

/// Shapes of initial histories drawn for delay systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HistoryFamily {
    Constant,
    Linear,
    Cubic,
}

impl HistoryFamily {
    pub const ALL: [HistoryFamily; 3] = [HistoryFamily::Constant, HistoryFamily::Linear, HistoryFamily::Cubic];

    fn draw(self, rng: &mut ChaCha8Rng, r: f64, n: usize) -> History {
        let mut u = || rng.gen_range(-1.0..=1.0);
        match self {
            HistoryFamily::Constant => {
                let v: Vec<f64> = (0..n).map(|_| u()).collect();
                History::constant(r, &v)
            }
            HistoryFamily::Linear => {
                let a: Vec<f64> = (0..n).map(|_| u()).collect();
                let b: Vec<f64> = (0..n).map(|_| u()).collect();
                History::linear(r, &a, &b)
            }
            HistoryFamily::Cubic => {
                let c: Vec<[f64; 4]> = (0..n).map(|_| [u(), u(), u(), u()]).collect();
                History::cubic(r, &c)
            }
        }
        .expect("family histories are finite")
    }
}

impl OdeSystem {
    /// `count` points drawn uniformly from `B_R ∩ Ω` by rejection; deterministic per seed.
    pub fn sample_domain(&self, radius: f64, count: usize, seed: u64) -> Result<Vec<StateVec>> {
        check_sampling_args(radius, count)?;
        let n = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        let mut draws = 0usize;
        while out.len() < count {
            let dir: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let len = euclid(&dir);
            if len == 0.0 {
                continue;
            }
            let rad = radius * rng.gen::<f64>().powf(1.0 / n as f64);
            let x: Vec<f64> = dir.iter().map(|d| d * rad / len).collect();
            draws += 1;
            if self.in_domain(&x) {
                out.push(StateVec::new(x)?);
            }
            if draws >= MAX_DRAWS_BEFORE_VERDICT
                && draws.is_multiple_of(MAX_DRAWS_BEFORE_VERDICT)
                && (out.len() as f64) < MIN_ACCEPT_RATE * draws as f64
            {
                return Err(Error::DomainTooThin { radius, accepted: out.len(), draws });
            }
        }
        Ok(out)
    }

    /// Quasi-random (Halton) points of `B_R ∩ Ω`, used for supremum estimates.
    /// `count` points on the sphere `|x| = R`, each pulled radially inward
    /// (factor 0.999 per try, up to 2000 tries) until it lies in Ω.
    pub fn sample_sphere(&self, radius: f64, count: usize, seed: u64) -> Result<Vec<StateVec>> {
        check_sampling_args(radius, count)?;
        let n = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        let mut draws = 0usize;
        while out.len() < count {
            draws += 1;
            if draws > MAX_DRAWS_BEFORE_VERDICT {
                return Err(Error::DomainTooThin { radius, accepted: out.len(), draws });
            }
            let dir: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let len = euclid(&dir);
            if len == 0.0 {
                continue;
            }
            let mut rad = radius;
            for _ in 0..2000 {
                let x: Vec<f64> = dir.iter().map(|d| d * rad / len).collect();
                if self.in_domain(&x) {
                    out.push(StateVec::new(x)?);
                    break;
                }
                rad *= 0.999;
            }
        }
        Ok(out)
    }

    pub fn quasi_random_domain(&self, radius: f64, count: usize) -> Result<Vec<Vec<f64>>> {
        check_sampling_args(radius, count)?;
        let mut out = Vec::with_capacity(count);
        let mut seen = 0usize;
        for p in halton_ball(self.dim(), radius) {
            seen += 1;
            if self.in_domain(&p) {
                out.push(p);
                if out.len() == count {
                    break;
                }
            }
            if seen >= MAX_DRAWS_BEFORE_VERDICT && (out.len() as f64) < MIN_ACCEPT_RATE * seen as f64 {
                return Err(Error::DomainTooThin { radius, accepted: out.len(), draws: seen });
            }
        }
        Ok(out)
    }
}

impl DelaySystem {
    /// `count` initial histories from the constant / linear / cubic families
    /// (cycled in that order), each scaled to a random sup norm below `radius`
    /// and then shrunk by 0.9 until it lies in Ω.
    pub fn sample_domain(&self, radius: f64, count: usize, seed: u64) -> Result<Vec<History>> {
        check_sampling_args(radius, count)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0usize;
        while out.len() < count {
            let family = HistoryFamily::ALL[out.len() % 3];
            let raw = family.draw(&mut rng, self.delay(), self.dim());
            let sup = raw.sup_norm();
            attempts += 1;
            if sup < 1e-12 {
                continue;
            }
            let mut h = raw.scaled(radius * rng.gen::<f64>() / sup);
            let mut shrinks = 0;
            while !self.in_domain(&h) {
                shrinks += 1;
                if shrinks > 400 {
                    return Err(Error::DomainTooThin { radius, accepted: out.len(), draws: attempts });
                }
                h = h.scaled(0.9);
            }
            out.push(h);
        }
        Ok(out)
    }
}

fn check_sampling_args(radius: f64, count: usize) -> Result<()> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidConfig(format!("sampling radius must be > 0, got {radius}")));
    }
    if count == 0 {
        return Err(Error::InvalidConfig("sample count must be ≥ 1".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_base_two() {
        assert_eq!(halton(1, 2), 0.5);
        assert_eq!(halton(2, 2), 0.25);
        assert_eq!(halton(3, 2), 0.75);
        assert!((halton(1, 3) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn quasi_points_inside_ball() {
        let pts = quasi_random_ball(3, 2.0, 500);
        assert_eq!(pts.len(), 500);
        assert!(pts.iter().all(|p| euclid(p) < 2.0));
    }

    #[test]
    fn thin_domain_is_reported() {
        let sys = OdeSystem::new("thin", 2, 1, |x| vec![-x[0], -x[1]], |x| vec![x[0]])
            .with_domain(|x| x[0].abs() < 1e-5 && x[1].abs() < 1e-5);
        match sys.sample_domain(1.0, 10, 0) {
            Err(Error::DomainTooThin { .. }) => {}
            other => panic!("expected DomainTooThin, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let sys = OdeSystem::new("lin", 1, 1, |x| vec![-x[0]], |x| vec![x[0]]);
        assert!(sys.sample_domain(0.0, 3, 0).is_err());
        assert!(sys.sample_domain(1.0, 0, 0).is_err());
    }
}
