//! Property tests for invariants that hold for every input, not just the
//! hand-checked examples.

use proptest::prelude::*;

use outstab::adaptive::{closed_loop, omega_member, AdaptiveConfig, AdaptivePlant};
use outstab::barbalat::{prop2_check, quc_verdict, uc_verdict, Signal};
use outstab::certificates::{check_thm1, ids, presets, CheckConfig, ComparisonFn, Tolerance};
use outstab::convergence::{analytic_t, empirical_conv_time, envelope, BoundOptions};
use outstab::integrate::{integrate_ode, IntegratorConfig};
use outstab::systems::{builtin, Example2, Example2Constants, GFunction, History, Params, System, BUILTIN_NAMES};
use outstab::Error;

fn ode(name: &str) -> outstab::systems::OdeSystem {
    builtin(name, &Params::new()).unwrap().as_ode().unwrap().clone()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sampling_is_deterministic(seed in any::<u64>(), n in 1usize..20, r in 0.1f64..3.0) {
        let sys = ode("example1");
        prop_assert_eq!(sys.sample_domain(r, n, seed).unwrap(), sys.sample_domain(r, n, seed).unwrap());
        let ex = Example2::new(Example2Constants::default()).unwrap().system();
        prop_assert_eq!(ex.sample_domain(1.0, 4, seed).unwrap(), ex.sample_domain(1.0, 4, seed).unwrap());
    }

    #[test]
    fn samples_lie_in_ball_and_domain(seed in any::<u64>(), n in 1usize..20) {
        let plant = AdaptivePlant::scalar_demo();
        let cfg = AdaptiveConfig::new(1.0, 2.0).unwrap();
        let sys = closed_loop(&plant, &cfg).unwrap();
        for x in sys.sample_domain(3.0, n, seed).unwrap() {
            prop_assert!(x.norm() <= 3.0);
            prop_assert!(omega_member(&plant, &cfg, &x));
        }
        let ex = Example2::new(Example2Constants::default()).unwrap();
        for h in ex.system().sample_domain(1.0, n, seed).unwrap() {
            prop_assert!(ex.v(&h) <= 0.5 + 1e-12);
        }
    }

    #[test]
    fn integration_is_deterministic(y in -2.0f64..2.0, z in -2.0f64..2.0, w in -1.0f64..1.0) {
        let sys = ode("example1");
        let cfg = IntegratorConfig::default().with_t_final(3.0);
        let a = integrate_ode(&sys, &[y, z, w], &cfg).unwrap();
        let b = integrate_ode(&sys, &[y, z, w], &cfg).unwrap();
        prop_assert_eq!(a.times(), b.times());
        prop_assert_eq!(a.states(), b.states());
    }

    #[test]
    fn dense_output_is_exact_at_knots(y0 in -3.0f64..3.0) {
        let sys = ode("decoupled_linear");
        let tr = integrate_ode(&sys, &[y0], &IntegratorConfig::default().with_t_final(5.0)).unwrap();
        for (t, x) in tr.times().iter().zip(tr.states()) {
            prop_assert_eq!(tr.dense_eval(*t).unwrap().to_vec(), x.clone());
        }
        // monotone solution: the interpolant stays between neighbouring knots
        for (w, s) in tr.times().windows(2).zip(tr.states().windows(2)) {
            let v = tr.dense_eval(0.5 * (w[0] + w[1])).unwrap()[0];
            let (lo, hi) = if s[0][0] <= s[1][0] { (s[0][0], s[1][0]) } else { (s[1][0], s[0][0]) };
            prop_assert!(v >= lo - 1e-15 && v <= hi + 1e-15);
        }
    }

    #[test]
    fn tolerance_is_monotone(lhs in -10.0f64..10.0, rhs in -10.0f64..10.0, a in 0.0f64..1.0, r in 0.0f64..1.0, grow in 1.0f64..10.0) {
        let small = Tolerance::new(a, r);
        let big = Tolerance::new(a * grow, r * grow);
        if small.passes(lhs, rhs) {
            prop_assert!(big.passes(lhs, rhs));
        }
        prop_assert!(Tolerance::new(0.0, 0.0).passes(lhs, rhs) == (lhs <= rhs));
    }

    #[test]
    fn analytic_t_is_monotone(e1 in 0.02f64..0.5, de in 0.01f64..0.5, r1 in 0.2f64..2.0, dr in 0.1f64..2.0, seed in 0u64..1000) {
        let sys = ode("decoupled_linear");
        let cert = presets::decoupled_thm1();
        let opts = BoundOptions { sup_samples: 256, min_grid: 256, seed, ..Default::default() };
        let t = |e: f64, r: f64| analytic_t(&cert, &sys, e, r, &opts).unwrap().t;
        prop_assert!(t(e1, r1) >= t(e1 + de, r1));
        prop_assert!(t(e1, r1 + dr) >= t(e1, r1));
    }

    #[test]
    fn convergence_time_is_monotone_in_epsilon(y in -2.0f64..2.0, z in -2.0f64..2.0, w in -1.0f64..1.0, e1 in 0.001f64..0.3, de in 0.001f64..0.3) {
        let sys = ode("example1");
        let tr = integrate_ode(&sys, &[y, z, w], &IntegratorConfig::default().with_t_final(20.0)).unwrap();
        let tight = empirical_conv_time(&tr, e1).unwrap();
        let loose = empirical_conv_time(&tr, e1 + de).unwrap();
        match (tight, loose) {
            (Some(a), Some(b)) => prop_assert!(a >= b - 1e-6),
            (Some(_), None) => prop_assert!(false, "looser threshold must converge"),
            _ => {}
        }
    }

    #[test]
    fn uc_implies_quc(vals in prop::collection::vec(-1.0f64..1.0, 12..200), eps in 0.05f64..2.0) {
        let sig = Signal::new("random", 0.1, vals).unwrap();
        let uc = uc_verdict(&sig, &[eps]).unwrap();
        let quc = quc_verdict(&sig, &[eps]).unwrap();
        if let Some(d) = uc[0] {
            prop_assert!(quc.entries[0].quc);
            prop_assert!(quc.entries[0].delta.unwrap() >= d);
        }
    }

    #[test]
    fn prop2_implies_quc(
        steps in prop::collection::vec(0.0f64..1.0, 12..300),
        m in 0.0f64..5.0,
        drops in prop::collection::vec(0.0f64..3.0, 12..300),
    ) {
        // increments never exceed M·dt, so g = f − M·t is non-increasing
        let dt = 0.01;
        let mut v = vec![0.0];
        for (u, d) in steps.iter().zip(drops.iter().cycle()) {
            let last = *v.last().unwrap();
            v.push(last + u * m * dt - d * (1.0 - u));
        }
        let sig = Signal::new("walk", dt, v).unwrap();
        prop_assert!(prop2_check(&sig, m).unwrap().holds);
        let eps = 2.0 * m * dt + 1e-9;
        prop_assert!(quc_verdict(&sig, &[eps]).unwrap().entries[0].quc);
    }

    #[test]
    fn example2_constants_match_formulas(p in 0.5f64..5.0, q in -1.0f64..1.0, big_q in 0.1f64..2.0, sigma in 0.1f64..3.0, r in 0.1f64..3.0) {
        let c = Example2Constants { p, q, big_q, sigma, r, ..Default::default() };
        let lambda = q * q * (sigma * r).exp() / (4.0 * big_q);
        prop_assert!((c.lambda() - lambda).abs() <= 1e-12 * lambda.max(1e-300));
        if lambda < p - big_q {
            let k = sigma * big_q / (2.0 * (p - big_q - lambda));
            prop_assert!((c.k() - k).abs() <= 1e-12 * k);
        } else {
            let infeasible = matches!(Example2::new(c), Err(Error::Infeasible { .. }));
            prop_assert!(infeasible);
        }
    }

    #[test]
    fn example2_large_radius_is_rejected(radius in 3.0f64..20.0) {
        let c = Example2Constants { radius, ..Default::default() };
        let infeasible = matches!(Example2::new(c), Err(Error::Infeasible { .. }));
        prop_assert!(infeasible);
        // the unchecked construction records a violating witness
        let ex = Example2::unchecked(c);
        prop_assert!(ex.feasibility_min_rhs < ex.feasibility_lhs);
        let [a, b] = ex.feasibility_argmin;
        prop_assert!((a * a + b * b).sqrt() <= radius * (1.0 + 1e-12));
        prop_assert!((c.feasibility_rhs(a, b) - ex.feasibility_min_rhs).abs() < 1e-12);
    }

    #[test]
    fn example1_lyapunov_identity(y in -5.0f64..5.0, z in -5.0f64..5.0, w in -5.0f64..5.0, g in prop::sample::select(vec!["sin", "tanh", "const:0.7"])) {
        let g: GFunction = g.parse().unwrap();
        let sys = builtin("example1", &Params::new().with_g(g)).unwrap();
        let f = sys.as_ode().unwrap().eval_field(&[y, z, w]).unwrap();
        let d = 1.0 + z * z;
        let lhs = y * f[0] + 2.0 * z / (d * d) * f[1];
        let rhs = -(1.0 + w * w) * y * y;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
    }

    #[test]
    fn catalog_equilibria_for_any_g(c in -3.0f64..3.0) {
        let params = Params::new().with_g(GFunction::Const(c));
        for name in BUILTIN_NAMES {
            let sys = match builtin(name, &params) {
                Ok(s) => s,
                // a large constant g can make the delay example infeasible
                Err(Error::Infeasible { .. }) => continue,
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            };
            match sys {
                System::Ode(s) => {
                    let z = vec![0.0; s.dim()];
                    prop_assert!(s.eval_field(&z).unwrap().iter().all(|v| *v == 0.0));
                    prop_assert!(s.eval_output(&z).unwrap().iter().all(|v| *v == 0.0));
                }
                System::Delay(s) => {
                    let h = History::zero(s.delay(), s.dim());
                    prop_assert!(s.eval_field(&h).unwrap().iter().all(|v| *v == 0.0));
                    prop_assert!(s.eval_output(&h).unwrap().iter().all(|v| *v == 0.0));
                }
            }
        }
    }

    #[test]
    fn comparison_functions_are_class_k_inf(c in 0.01f64..100.0, p in 0.5f64..4.0) {
        for f in [ComparisonFn::Linear { c }, ComparisonFn::Quadratic { c }, ComparisonFn::Power { c, p }] {
            prop_assert!(f.check_class_k_inf().is_ok());
            prop_assert_eq!(f.value(0.0), 0.0);
        }
        let capped = ComparisonFn::Capped { c, cap: 1.0 };
        prop_assert!(capped.check_class_k_inf().is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn adaptive_omega_is_invariant_and_v_decreases(seed in any::<u64>(), gamma in 0.5f64..2.0, l in 0.5f64..3.0) {
        let plant = AdaptivePlant::scalar_demo();
        let cfg = AdaptiveConfig::new(gamma, l).unwrap();
        let sys = closed_loop(&plant, &cfg).unwrap();
        let r = (2.0 * gamma * l / gamma.min(1.0)).sqrt();
        for x0 in sys.sample_domain(r, 6, seed).unwrap() {
            let tr = integrate_ode(&sys, &x0, &IntegratorConfig::default().with_t_final(20.0)).unwrap();
            prop_assert!(tr.domain_exits().is_empty());
            let v: Vec<f64> = tr.states().iter().map(|x| 0.5 * x[0] * x[0] + 0.5 * gamma * x[1] * x[1]).collect();
            prop_assert!(v.iter().all(|&e| e <= gamma * l + 1e-9));
            prop_assert!(v.windows(2).all(|w| w[1] <= w[0] + 1e-9));
        }
    }

    #[test]
    fn w_pairs_hold_on_the_decoupled_oracle(seed in any::<u64>()) {
        let sys = ode("decoupled_linear");
        let trajs: Vec<_> = sys
            .sample_domain(2.0, 5, seed)
            .unwrap()
            .iter()
            .map(|x| integrate_ode(&sys, x, &IntegratorConfig::default().with_t_final(5.0)).unwrap())
            .collect();
        let cfg = CheckConfig { radius: 2.0, samples: 20, seed, ..Default::default() };
        let rep = check_thm1(&sys, &presets::decoupled_thm1(), &cfg, &trajs).unwrap();
        prop_assert!(rep.passed());
        prop_assert!(rep.condition(ids::W_PAIRS).unwrap().margin >= 0.0);
    }

    #[test]
    fn envelope_m_below_zeta(seed in any::<u64>()) {
        let sys = ode("example1");
        let radii = [0.0, 0.5, 1.0, 2.0];
        let times = [0.0, 0.5, 2.0, 5.0];
        let tab = envelope(&sys, &radii, &times, 4, seed, &IntegratorConfig::default()).unwrap();
        for (j, z) in tab.zeta.iter().enumerate() {
            for row in &tab.m {
                prop_assert!(row[j] <= *z);
            }
            if j > 0 {
                prop_assert!(tab.zeta[j] >= tab.zeta[j - 1]);
            }
        }
        // at t = 0 the output is bounded by the radius for h(x) = y
        for (j, &s) in radii.iter().enumerate() {
            prop_assert!(tab.m[0][j] <= s);
        }
    }
}
