//! Ready-made certificates for the catalog systems.

use super::{Certificate, CertificateParts, ComparisonFn, ScalarField, Side, Target};
use crate::adaptive::{thm3_certificate, AdaptiveConfig, AdaptivePlant};
use crate::error::{Error, Result};
use crate::systems::{Example2, Example2Constants, GFunction, HistoryQuery, Params};

/// `(preset, system it is written for, summary)`
pub const PRESETS: [(&str, &str, &str); 8] = [
    ("decoupled-thm1", "decoupled_linear", "V = W = y^2/2, rho(s) = 2s, a(s) = s^2/2"),
    ("decoupled-prop1", "decoupled_linear", "W = y^2/2, a(s) = s^2/2, b(s) = s^2"),
    ("example1-thm2", "example1", "V = y^2/2 + z^2/(1+z^2), W = y^2/2, b(s) = s^2, gamma = R_g^2/4 (upper)"),
    ("example1-thm2-zero-gamma", "example1", "as example1-thm2 with gamma = 0 (expected to fail)"),
    ("example1-w-as-thm1", "example1", "example1 functions under the uniform target (expected to fail)"),
    ("example2-cor1", "example2", "weighted-integral functionals V, W, rho(s) = 2(p - Q - lambda)s"),
    ("adaptive-thm1", "adaptive_redesigned", "V = P(y) + gamma|z|^2/2, W = P(y), rho(s) = 2s, a(s) = s^2/2"),
    ("adaptive-prop1", "adaptive_redesigned", "W = P(y), a(s) = s^2/2, b(s) = s^2/2"),
];

/// A preset for either kind of system.
#[derive(Debug, Clone)]
pub enum Preset {
    Ode(Certificate<[f64]>),
    Delay(Certificate<dyn HistoryQuery>),
}

impl Preset {
    pub fn target(&self) -> Target {
        match self {
            Preset::Ode(c) => c.target(),
            Preset::Delay(c) => c.target(),
        }
    }

    pub fn retarget(&self, target: Target) -> Result<Self> {
        Ok(match self {
            Preset::Ode(c) => Preset::Ode(c.retarget(target)?),
            Preset::Delay(c) => Preset::Delay(c.retarget(target)?),
        })
    }
}

/// Builds preset `name` using the same parameters as the system it targets.
pub fn preset(name: &str, params: &Params) -> Result<Preset> {
    Ok(match name {
        "decoupled-thm1" => Preset::Ode(decoupled_thm1()),
        "decoupled-prop1" => Preset::Ode(decoupled_prop1()),
        "example1-thm2" => Preset::Ode(example1_thm2(params.g)),
        "example1-thm2-zero-gamma" => Preset::Ode(example1_thm2(params.g).with_gamma(ComparisonFn::Constant { c: 0.0 })?),
        "example1-w-as-thm1" => Preset::Ode(example1_w_as_thm1(params.g)),
        "example2-cor1" => Preset::Delay(example2_cor1(&Example2::new(Example2Constants::from_params(params))?)),
        "adaptive-thm1" | "adaptive-prop1" => {
            let cfg = AdaptiveConfig::new(params.get_or("gamma", 1.0), params.get_or("L", 2.0))?;
            let cert = adaptive_thm1(&cfg)?;
            if name == "adaptive-prop1" {
                Preset::Ode(Certificate::new(
                    "adaptive-prop1",
                    Target::Prop1,
                    CertificateParts {
                        w: Some(cert.w().clone()),
                        a: Some(cert.a()),
                        b: Some(ComparisonFn::Quadratic { c: 0.5 }),
                        ..Default::default()
                    },
                )?)
            } else {
                Preset::Ode(cert)
            }
        }
        other => {
            let known: Vec<&str> = PRESETS.iter().map(|p| p.0).collect();
            return Err(Error::Certificate(format!("unknown preset `{other}` (known: {})", known.join(", "))));
        }
    })
}

fn half_square() -> ScalarField<[f64]> {
    ScalarField::new("y^2/2", |x: &[f64]| 0.5 * x[0] * x[0])
}

/// `ẏ = −y` with `V = W = ½y²`.
pub fn decoupled_thm1() -> Certificate<[f64]> {
    let f = half_square().with_derivative(|x| -x[0] * x[0]);
    Certificate::new(
        "decoupled-thm1",
        Target::Thm1,
        CertificateParts {
            v: Some(f.clone()),
            w: Some(f),
            rho: Some(ComparisonFn::Linear { c: 2.0 }),
            a: Some(ComparisonFn::Quadratic { c: 0.5 }),
            ..Default::default()
        },
    )
    .expect("preset is complete")
}

pub fn decoupled_prop1() -> Certificate<[f64]> {
    Certificate::new(
        "decoupled-prop1",
        Target::Prop1,
        CertificateParts {
            w: Some(half_square().with_derivative(|x| -x[0] * x[0])),
            a: Some(ComparisonFn::Quadratic { c: 0.5 }),
            b: Some(ComparisonFn::Quadratic { c: 1.0 }),
            ..Default::default()
        },
    )
    .expect("preset is complete")
}

/// `V = ½y² + z²/(1+z²)` with `V̇ = −(1+w²)y²`.
pub fn example1_v() -> ScalarField<[f64]> {
    ScalarField::new("y^2/2 + z^2/(1+z^2)", |x: &[f64]| 0.5 * x[0] * x[0] + x[1] * x[1] / (1.0 + x[1] * x[1]))
        .with_derivative(|x| -(1.0 + x[2] * x[2]) * x[0] * x[0])
}

/// `W = ½y²` with `Ẇ = yẏ`, which changes sign.
pub fn example1_w(g: GFunction) -> ScalarField<[f64]> {
    half_square().with_derivative(move |x| {
        let (y, z, w) = (x[0], x[1], x[2]);
        let d = 1.0 + z * z;
        y * (-(1.0 + w * w) * y + 2.0 * z * g.eval(z, w) / (d * d))
    })
}

/// Non-uniform certificate: `Ẇ ≤ yz·2g/(1+z²)² − y² ≤ R_g²/4`.
pub fn example1_thm2(g: GFunction) -> Certificate<[f64]> {
    let rg = g.bound();
    Certificate::new(
        "example1-thm2",
        Target::Thm2,
        CertificateParts {
            v: Some(example1_v()),
            w: Some(example1_w(g)),
            rho: Some(ComparisonFn::Linear { c: 2.0 }),
            a: Some(ComparisonFn::Quadratic { c: 0.5 }),
            b: Some(ComparisonFn::Quadratic { c: 1.0 }),
            gamma: Some(ComparisonFn::Constant { c: 0.25 * rg * rg }),
            side: Some(Side::Upper),
            ..Default::default()
        },
    )
    .expect("preset is complete")
}

/// The same functions under the uniform target; `W` is not monotone so this fails.
pub fn example1_w_as_thm1(g: GFunction) -> Certificate<[f64]> {
    example1_thm2(g).retarget(Target::Thm1).expect("V and rho present").renamed("example1-w-as-thm1")
}

/// Delay-example functionals; derivatives are left to forward differences.
pub fn example2_cor1(ex: &Example2) -> Certificate<dyn HistoryQuery> {
    let (ev, ew) = (ex.clone(), ex.clone());
    let q = ex.constants.big_q;
    Certificate::new(
        "example2-cor1",
        Target::Cor1,
        CertificateParts {
            v: Some(ScalarField::new("V", move |h| ev.v(h))),
            w: Some(ScalarField::new("W", move |h| ew.w(h))),
            rho: Some(ComparisonFn::Linear { c: ex.rho_slope() }),
            a: Some(ComparisonFn::Quadratic { c: 0.5 }),
            b: Some(ComparisonFn::Quadratic { c: q + 0.5 }),
            ..Default::default()
        },
    )
    .expect("preset is complete")
}

/// The scalar demo plant's uniform certificate for the redesigned loop.
pub fn adaptive_thm1(cfg: &AdaptiveConfig) -> Result<Certificate<[f64]>> {
    thm3_certificate(&AdaptivePlant::scalar_demo(), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_builds() {
        for (name, _, _) in PRESETS {
            preset(name, &Params::new()).unwrap();
        }
        assert!(preset("nope", &Params::new()).is_err());
    }

    #[test]
    fn example1_v_derivative_matches_gradient() {
        let sys = crate::systems::builtin("example1", &Params::new()).unwrap();
        let sys = sys.as_ode().unwrap();
        let v = example1_v();
        for x in sys.quasi_random_domain(2.0, 50).unwrap() {
            let f = sys.eval_field(&x).unwrap();
            let (y, z) = (x[0], x[1]);
            let d = 1.0 + z * z;
            let grad = [y, 2.0 * z / (d * d), 0.0];
            let lhs: f64 = grad.iter().zip(&f).map(|(a, b)| a * b).sum();
            let rhs = v.closed_form_derivative(&x).unwrap();
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-300) + 1e-15, "{x:?}");
        }
    }
}
