use std::path::Path;

use anyhow::{bail, Context};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use outstab::adaptive::{
    check_p_decay, closed_loop, nonuniformity_demo, plant_loop, thm3_certificate, AdaptiveConfig, AdaptivePlant,
};
use outstab::barbalat::{catalog_signal, lemma3_check_with, prop2_check, quc_verdict, uc_verdict, Lemma3Outcome, Signal};
use outstab::certificates::presets::{preset, Preset, PRESETS};
use outstab::certificates::{
    check_cor1, check_cor2, check_prop1, check_thm1, check_thm2, Certificate, CheckConfig, CheckReport, ComparisonFn, Target,
    Tolerance,
};
use outstab::convergence::{
    analytic_t, envelope, uniformity_sweep, BoundOptions, ConvergenceReport, SweepOptions, SweepVerdict, Sweepable,
};
use outstab::integrate::{integrate_dde, integrate_ode, IntegratorConfig, Trajectory};
use outstab::systems::{builtin, catalog_names, DelaySystem, History, OdeSystem, System};

use crate::args::*;
use crate::output::{num, read_columns, report, write_csv, write_json};
use crate::plot;

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    fn from_pass(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

const SIMULATE_TF: f64 = 10.0;
const CHECK_TF: f64 = 20.0;
const SWEEP_TF: f64 = 50.0;
const ADAPTIVE_TF: f64 = 50.0;
const DEMO_TF: f64 = 200.0;
const PLOT_POINTS: usize = 400;
const FAN_CURVES: usize = 60;

fn load(system: &SystemArgs) -> anyhow::Result<(System, outstab::systems::Params)> {
    let params = system.params()?;
    let sys = builtin(&system.system, &params)?;
    Ok((sys, params))
}

fn mismatch(sys: &System, cert: &str) -> anyhow::Error {
    let kind = if sys.as_ode().is_some() { "an ODE" } else { "a delay" };
    anyhow::anyhow!("preset `{cert}` does not apply to {kind} system `{}`", sys.name())
}

fn cert_for(sys: &System, name: &str, params: &outstab::systems::Params, target: Option<&str>) -> anyhow::Result<Preset> {
    let mut p = preset(name, params)?;
    if let Some(t) = target {
        p = p.retarget(t.parse::<Target>()?)?;
    }
    match (sys, &p) {
        (System::Ode(_), Preset::Ode(_)) | (System::Delay(_), Preset::Delay(_)) => Ok(p),
        _ => Err(mismatch(sys, name)),
    }
}

fn solve_all_ode(sys: &OdeSystem, inits: &[Vec<f64>], cfg: &IntegratorConfig) -> anyhow::Result<Vec<Trajectory>> {
    Ok(inits.par_iter().map(|x0| integrate_ode(sys, x0, cfg)).collect::<Result<_, _>>()?)
}

fn ode_trajectories(sys: &OdeSystem, radius: f64, count: usize, seed: u64, cfg: &IntegratorConfig) -> anyhow::Result<Vec<Trajectory>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let inits: Vec<Vec<f64>> = sys.sample_domain(radius, count, seed)?.into_iter().map(|x| x.into_inner()).collect();
    solve_all_ode(sys, &inits, cfg)
}

fn delay_trajectories(sys: &DelaySystem, radius: f64, count: usize, seed: u64, cfg: &IntegratorConfig) -> anyhow::Result<Vec<Trajectory>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let inits = sys.sample_domain(radius, count, seed)?;
    Ok(inits.par_iter().map(|h| integrate_dde(sys, h, cfg)).collect::<Result<_, _>>()?)
}

// ---------------------------------------------------------------- list-systems

pub fn list_systems(a: &ListArgs) -> anyhow::Result<Status> {
    if a.json {
        let systems: Vec<_> = catalog_names().into_iter().map(|(n, d)| json!({"name": n, "description": d})).collect();
        let presets: Vec<_> =
            PRESETS.iter().map(|(n, s, d)| json!({"name": n, "system": s, "description": d})).collect();
        write_json(None, &json!({"schema_version": crate::output::SCHEMA_VERSION, "systems": systems, "presets": presets}))?;
    } else {
        println!("SYSTEMS");
        for (n, d) in catalog_names() {
            println!("  {n:<22} {d}");
        }
        println!("\nCERTIFICATE PRESETS");
        for (n, s, d) in PRESETS {
            println!("  {n:<26} [{s}] {d}");
        }
    }
    Ok(Status::Pass)
}

// -------------------------------------------------------------------- simulate

pub fn simulate(a: &SimulateArgs) -> anyhow::Result<Status> {
    let (sys, _) = load(&a.system)?;
    let cfg = a.integ.config(SIMULATE_TF);
    let tr = match &sys {
        System::Ode(s) => {
            if a.x0_past.is_some() {
                bail!("--x0-past only applies to delay systems");
            }
            integrate_ode(s, &a.x0, &cfg)?
        }
        System::Delay(s) => {
            let h = match &a.x0_past {
                Some(past) => History::linear(s.delay(), past, &a.x0)?,
                None => History::constant(s.delay(), &a.x0)?,
            };
            integrate_dde(s, &h, &cfg)?
        }
    };
    let mut header = vec!["t".to_string()];
    header.extend((1..=tr.dim()).map(|i| format!("x{i}")));
    header.extend((1..=tr.output_dim()).map(|i| format!("y{i}")));
    let rows = tr.times().iter().zip(tr.states()).zip(tr.outputs()).map(|((t, x), y)| {
        std::iter::once(*t).chain(x.iter().copied()).chain(y.iter().copied()).map(num).collect::<Vec<_>>()
    });
    write_csv(a.csv.as_deref(), &header, rows)?;
    if let Some(path) = &a.svg {
        let series: Vec<(String, Vec<(f64, f64)>)> = (0..tr.output_dim())
            .map(|k| {
                let pts = tr.times().iter().zip(tr.outputs()).map(|(t, y)| (*t, y[k])).collect();
                (format!("y{}", k + 1), plot::thin(pts, 4 * PLOT_POINTS))
            })
            .collect();
        plot::lines(path, &format!("{} outputs", tr.system()), &series)?;
    }
    if !tr.domain_exits().is_empty() {
        eprintln!("note: trajectory left the domain at t = {:?}", tr.domain_exits());
    }
    Ok(Status::Pass)
}

// --------------------------------------------------------------------- certify

pub fn check_ode(sys: &OdeSystem, cert: &Certificate<[f64]>, cfg: &CheckConfig, trajs: &[Trajectory]) -> anyhow::Result<CheckReport> {
    Ok(match cert.target() {
        Target::Thm1 => check_thm1(sys, cert, cfg, trajs)?,
        Target::Thm2 => check_thm2(sys, cert, cfg, trajs)?,
        Target::Prop1 => check_prop1(sys, cert, cfg, trajs)?,
        t => bail!("target {t} needs a delay system, `{}` is an ODE", sys.name()),
    })
}

fn check_delay(
    sys: &DelaySystem,
    cert: &Certificate<dyn outstab::systems::HistoryQuery>,
    cfg: &CheckConfig,
    trajs: &[Trajectory],
) -> anyhow::Result<CheckReport> {
    Ok(match cert.target() {
        Target::Cor1 => check_cor1(sys, cert, cfg, trajs)?,
        Target::Cor2 => check_cor2(sys, cert, cfg, trajs)?,
        t => bail!("target {t} needs an ODE system, `{}` has a delay", sys.name()),
    })
}

fn print_check(rep: &CheckReport) {
    eprintln!("{} / {} [{}]: {:?}", rep.system, rep.certificate.name, rep.certificate.target, rep.overall);
    for c in &rep.conditions {
        eprintln!("  {:<28} {:?}  margin {:+.3e}  ({} points, {} failures)", c.id, c.verdict, c.margin, c.points, c.failures);
    }
}

/// Moves the report's own `config` (the resolved check settings) under the
/// top-level `config` so the two do not collide.
fn check_report_json(command: &str, mut config: serde_json::Value, rep: &CheckReport) -> anyhow::Result<serde_json::Value> {
    let mut body = serde_json::to_value(rep)?;
    if let (Some(b), Some(c)) = (body.as_object_mut(), config.as_object_mut()) {
        if let Some(check) = b.remove("config") {
            c.insert("check".into(), check);
        }
    }
    report(command, config, body)
}

pub fn certify(a: &CertifyArgs) -> anyhow::Result<Status> {
    let (sys, params) = load(&a.system)?;
    let cert = cert_for(&sys, &a.cert, &params, a.target.as_deref())?;
    let integ = a.integ.config(CHECK_TF);
    let check = CheckConfig {
        radius: a.radius,
        samples: a.samples,
        seed: a.seed,
        tol: Tolerance::new(a.tol_abs, a.tol_rel),
        ..CheckConfig::default()
    };
    let rep = match (&sys, &cert) {
        (System::Ode(s), Preset::Ode(c)) => {
            let trajs = ode_trajectories(s, a.traj_radius, a.trajectories, a.seed, &integ)?;
            check_ode(s, c, &check, &trajs)?
        }
        (System::Delay(s), Preset::Delay(c)) => {
            let trajs = delay_trajectories(s, a.traj_radius, a.trajectories, a.seed, &integ)?;
            check_delay(s, c, &check, &trajs)?
        }
        _ => unreachable!("cert_for rejects mismatches"),
    };
    print_check(&rep);
    let config = json!({"args": a, "params": sys.params(), "g": params.g, "integrator": integ});
    write_json(a.json.as_deref(), &check_report_json("certify", config, &rep)?)?;
    Ok(Status::from_pass(rep.passed()))
}

// ----------------------------------------------------------------------- tconv

pub fn tconv(a: &TconvArgs) -> anyhow::Result<Status> {
    let (sys, params) = load(&a.system)?;
    let cert = cert_for(&sys, &a.cert, &params, None)?;
    let opts = BoundOptions { sup_samples: a.sup_samples, min_grid: a.min_grid, inflation: a.inflation, seed: a.seed };
    let bound = match (&sys, &cert) {
        (System::Ode(s), Preset::Ode(c)) => analytic_t(c, s, a.epsilon, a.radius, &opts)?,
        (System::Delay(s), Preset::Delay(c)) => analytic_t(c, s, a.epsilon, a.radius, &opts)?,
        _ => unreachable!("cert_for rejects mismatches"),
    };
    eprintln!(
        "T({}, {}) = {:.6} (sup V = {:.4}, sup W = {:.4}, min rho = {:.4e} at {:.4})",
        a.epsilon, a.radius, bound.t, bound.sup_v, bound.sup_w, bound.rho_min, bound.rho_argmin
    );
    let config = json!({"args": a, "params": sys.params(), "g": params.g, "bound_options": opts});
    write_json(a.json.as_deref(), &report("tconv", config, &bound)?)?;
    Ok(Status::Pass)
}

// ----------------------------------------------------------------------- sweep

fn sweep_typed<S: Sweepable + ?Sized>(
    sys: &S,
    cert: Option<&Certificate<S::Arg>>,
    opts: &SweepOptions,
    cfg: &IntegratorConfig,
) -> anyhow::Result<(ConvergenceReport, Vec<Trajectory>)> {
    Ok(uniformity_sweep(sys, cert, opts, cfg)?)
}

fn run_sweep(
    sys: &System,
    cert: Option<&Preset>,
    opts: &SweepOptions,
    cfg: &IntegratorConfig,
) -> anyhow::Result<(ConvergenceReport, Vec<Trajectory>)> {
    match (sys, cert) {
        (System::Ode(s), None) => sweep_typed(s, None, opts, cfg),
        (System::Ode(s), Some(Preset::Ode(c))) => sweep_typed(s, Some(c), opts, cfg),
        (System::Delay(s), None) => sweep_typed(s, None, opts, cfg),
        (System::Delay(s), Some(Preset::Delay(c))) => sweep_typed(s, Some(c), opts, cfg),
        _ => unreachable!("cert_for rejects mismatches"),
    }
}

fn print_sweep(rep: &ConvergenceReport) {
    let t = rep.t_analytic.map_or("-".to_string(), |t| format!("{t:.4}"));
    eprintln!(
        "{}: {} samples, eps {}, R {}, horizon {:.3}: T_emp sup {:.4}, T_analytic {t}, not converged {}, {:?}",
        rep.system,
        rep.entries.len(),
        rep.epsilon,
        rep.radius,
        rep.horizon,
        rep.t_emp_sup,
        rep.not_converged,
        rep.verdict
    );
}

fn sweep_svg(path: &Path, rep: &ConvergenceReport, trajs: &[Trajectory]) -> anyhow::Result<()> {
    let fan: Vec<Vec<(f64, f64)>> = trajs
        .iter()
        .take(FAN_CURVES)
        .map(|tr| plot::thin(tr.times().iter().copied().zip(tr.output_norms()).collect(), PLOT_POINTS))
        .collect();
    let scatter: Vec<(f64, f64)> = rep.entries.iter().filter_map(|e| e.t_emp.map(|t| (e.x0_norm, t))).collect();
    plot::sweep(path, &fan, rep.epsilon, &scatter, rep.t_analytic)
}

pub fn sweep(a: &SweepArgs) -> anyhow::Result<Status> {
    let (sys, params) = load(&a.system)?;
    let cert = a.cert.as_deref().map(|c| cert_for(&sys, c, &params, None)).transpose()?;
    let cfg = a.integ.config(SWEEP_TF);
    let mut opts = SweepOptions::new(a.epsilon, a.radius, a.samples, a.seed);
    opts.horizon = a.horizon;
    opts.boundary_fraction = a.boundary_fraction;
    let (rep, trajs) = run_sweep(&sys, cert.as_ref(), &opts, &cfg)?;
    print_sweep(&rep);
    if let Some(path) = &a.csv {
        let n = rep.entries.first().map_or(0, |e| e.x0.len());
        let mut header = vec!["sample_id".to_string()];
        header.extend((1..=n).map(|i| format!("x0_{i}")));
        header.extend(["x0_norm".to_string(), "T_emp".to_string()]);
        let rows = rep.entries.iter().map(|e| {
            let mut r = vec![e.id.to_string()];
            r.extend(e.x0.iter().copied().map(num));
            r.push(num(e.x0_norm));
            r.push(e.t_emp.map_or(String::new(), num));
            r
        });
        write_csv(Some(path), &header, rows)?;
    }
    if let Some(path) = &a.svg {
        sweep_svg(path, &rep, &trajs)?;
    }
    if a.json.is_some() || a.csv.is_none() {
        let config = json!({"args": a, "params": sys.params(), "g": params.g, "integrator": cfg, "sweep": opts});
        write_json(a.json.as_deref(), &report("sweep", config, &rep)?)?;
    }
    Ok(Status::from_pass(rep.verdict != SweepVerdict::BoundViolated))
}

// -------------------------------------------------------------------- envelope

pub fn envelope_cmd(a: &EnvelopeArgs) -> anyhow::Result<Status> {
    let (sys, params) = load(&a.system)?;
    let cfg = a.integ.config(a.times.last().copied().unwrap_or(SIMULATE_TF).max(SIMULATE_TF));
    let table = match &sys {
        System::Ode(s) => envelope(s, &a.radii, &a.times, a.per_radius, a.seed, &cfg)?,
        System::Delay(s) => envelope(s, &a.radii, &a.times, a.per_radius, a.seed, &cfg)?,
    };
    for (i, t) in table.times.iter().enumerate() {
        let row: Vec<String> = table.m[i].iter().map(|v| format!("{v:.4e}")).collect();
        eprintln!("M(t = {t}) = [{}]", row.join(", "));
    }
    let zeta: Vec<String> = table.zeta.iter().map(|v| format!("{v:.4e}")).collect();
    eprintln!("zeta      = [{}]", zeta.join(", "));
    if let Some(path) = &a.csv {
        let mut header = vec!["t".to_string()];
        header.extend(table.radii.iter().map(|r| format!("R={r}")));
        let mut rows: Vec<Vec<String>> = table
            .times
            .iter()
            .zip(&table.m)
            .map(|(t, row)| std::iter::once(num(*t)).chain(row.iter().copied().map(num)).collect())
            .collect();
        rows.push(std::iter::once("zeta".to_string()).chain(table.zeta.iter().copied().map(num)).collect());
        write_csv(Some(path), &header, rows)?;
    }
    if a.json.is_some() || a.csv.is_none() {
        let config = json!({"args": a, "params": sys.params(), "g": params.g, "integrator": cfg});
        write_json(a.json.as_deref(), &report("envelope", config, &table)?)?;
    }
    Ok(Status::Pass)
}

// -------------------------------------------------------------------- barbalat

/// `linear:c`, `quadratic:c`, `power:c:p`, `capped:c:cap`, `bump:c`.
pub fn parse_rho(s: &str) -> anyhow::Result<ComparisonFn> {
    let parts: Vec<&str> = s.split(':').collect();
    let nums = parts[1..]
        .iter()
        .map(|p| p.trim().parse::<f64>().with_context(|| format!("bad number `{p}` in rho `{s}`")))
        .collect::<anyhow::Result<Vec<f64>>>()?;
    let rho = match (parts[0], nums.as_slice()) {
        ("linear", [c]) => ComparisonFn::Linear { c: *c },
        ("quadratic", [c]) => ComparisonFn::Quadratic { c: *c },
        ("power", [c, p]) => ComparisonFn::Power { c: *c, p: *p },
        ("capped", [c, cap]) => ComparisonFn::Capped { c: *c, cap: *cap },
        ("bump", [c]) => ComparisonFn::Bump { c: *c },
        _ => bail!("unknown rho `{s}` (linear:c, quadratic:c, power:c:p, capped:c:cap, bump:c)"),
    };
    rho.check_positive_definite()?;
    Ok(rho)
}

/// Linear interpolation of `(t, v)` onto `0, dt, 2dt, … ≤ t_last`.
fn resample(t: &[f64], v: &[f64], dt: f64) -> anyhow::Result<Vec<f64>> {
    if !(dt > 0.0) {
        bail!("--dt must be > 0");
    }
    if t.len() < 2 || t[0].abs() > 1e-12 || t.windows(2).any(|w| !(w[1] > w[0])) {
        bail!("time column must start at 0 and increase strictly");
    }
    let last = *t.last().expect("non-empty");
    let n = (last / dt + 1e-9).floor() as usize + 1;
    let mut j = 0;
    Ok((0..n)
        .map(|i| {
            let s = (i as f64 * dt).min(last);
            while j + 2 < t.len() && t[j + 1] < s {
                j += 1;
            }
            let w = (s - t[j]) / (t[j + 1] - t[j]);
            v[j] + w.clamp(0.0, 1.0) * (v[j + 1] - v[j])
        })
        .collect())
}

fn load_signal(a: &BarbalatArgs) -> anyhow::Result<Signal> {
    let path = Path::new(&a.signal);
    if path.is_file() {
        if a.horizon.is_some() {
            bail!("--horizon applies to catalog signals only");
        }
        let (t, v) = read_columns(path, &a.column)?;
        let name = format!("{}:{}", path.display(), a.column);
        Ok(match a.dt {
            Some(dt) => Signal::new(name, dt, resample(&t, &v, dt)?)?,
            None => Signal::from_columns(name, &t, &v)
                .context("non-uniform time grid; pass --dt to resample")?,
        })
    } else {
        Ok(catalog_signal(&a.signal, a.dt, a.horizon)?)
    }
}

pub fn barbalat(a: &BarbalatArgs) -> anyhow::Result<Status> {
    let mut sig = load_signal(a)?;
    if a.abs {
        sig = Signal::new(format!("|{}|", sig.name()), sig.dt(), sig.values().iter().map(|v| v.abs()).collect())?;
    }
    let rho = parse_rho(&a.rho)?;
    let quc = quc_verdict(&sig, &a.eps)?;
    let neg_quc = quc_verdict(&sig.negated(), &a.eps)?;
    let uc = uc_verdict(&sig, &a.eps)?;
    let prop2 = a.m.map(|m| prop2_check(&sig, m)).transpose()?;
    let (lemma, lemma_skipped) = if sig.values().iter().any(|v| *v < 0.0) {
        (None, Some("signal takes negative values; the lemma needs f ≥ 0 (try --abs)".to_string()))
    } else {
        (Some(lemma3_check_with(&sig, &rho, rho.is_non_decreasing(), &a.eps, a.tail_fraction)?), None)
    };

    eprintln!("{}: dt {}, horizon {}", sig.name(), sig.dt(), sig.horizon());
    for ((q, n), u) in quc.entries.iter().zip(&neg_quc.entries).zip(&uc) {
        eprintln!(
            "  eps {:<6} QUC(f) {:<5} QUC(-f) {:<5} UC {:<5} delta {}",
            q.epsilon,
            q.quc,
            n.quc,
            u.is_some(),
            q.delta.map_or("-".into(), |d| format!("{d:.3e}"))
        );
    }
    if let Some(p) = &prop2 {
        eprintln!("  f - {} t non-increasing: {}", p.m, p.holds);
    }
    match (&lemma, &lemma_skipped) {
        (Some(l), _) => eprintln!(
            "  lemma: hypotheses {}, integral {:.4e}, tail sup {:.4e}: {:?}",
            l.hypotheses_met, l.integral, l.tail_sup, l.outcome
        ),
        (None, Some(why)) => eprintln!("  lemma skipped: {why}"),
        _ => {}
    }

    let contradicted = lemma.as_ref().is_some_and(|l| l.outcome == Lemma3Outcome::Contradicted);
    let body = json!({
        "signal": sig.name(),
        "dt": sig.dt(),
        "horizon": sig.horizon(),
        "quc": quc,
        "neg_quc": neg_quc,
        "uc_delta": uc,
        "prop2": prop2,
        "lemma": lemma,
        "lemma_skipped": lemma_skipped,
    });
    write_json(a.json.as_deref(), &report("barbalat", json!({"args": a, "rho": rho}), body)?)?;
    Ok(Status::from_pass(!contradicted))
}

// -------------------------------------------------------------------- adaptive

#[derive(Serialize)]
struct AdaptiveConfigOut<'a> {
    args: &'a AdaptiveArgs,
    controller: &'a AdaptiveConfig,
    radius: f64,
    integrator: &'a IntegratorConfig,
    demo_integrator: &'a IntegratorConfig,
}

pub fn adaptive(a: &AdaptiveArgs) -> anyhow::Result<Status> {
    let plant = AdaptivePlant::scalar_demo();
    let l = match a.scheme {
        Scheme::Basic => 0.0,
        Scheme::Redesigned => a.l,
    };
    if a.scheme == Scheme::Redesigned && !(a.l > 0.0) {
        bail!("the redesigned scheme needs --L > 0");
    }
    let cfg = AdaptiveConfig::new(a.gamma, l)?.with_theta(vec![a.theta]).with_theta_hat0(vec![a.theta_hat0]);
    // ball enclosing the invariant set for the redesigned law
    let radius = if l > 0.0 { (2.0 * a.gamma * l / a.gamma.min(1.0)).sqrt() } else { 2.0 };
    let integ = a.integ.config(ADAPTIVE_TF);
    let demo_integ = integ.with_t_final(a.integ.tf.unwrap_or(DEMO_TF));
    let mut ok = true;

    let assumptions = plant.check_assumptions(3.0, 1001, 0.0)?;
    ok &= assumptions.passed();
    eprintln!(
        "assumptions: stabilizability margin {:.3e}, regressor margin {:.3e}: {}",
        assumptions.stabilizability_margin,
        assumptions.regressor_margin,
        if assumptions.passed() { "pass" } else { "FAIL" }
    );

    let sys = closed_loop(&plant, &cfg)?;
    let (certificate, decay, cert) = if l > 0.0 {
        let cert = thm3_certificate(&plant, &cfg)?;
        let check = CheckConfig { radius, samples: a.samples, seed: a.seed, ..CheckConfig::default() };
        let trajs = ode_trajectories(&sys, radius, a.trajectories, a.seed, &integ)?;
        let rep = check_ode(&sys, &cert, &check, &trajs)?;
        let decay = check_p_decay(&plant, &cfg, &trajs, Tolerance::new(1e-6, 0.0))?;
        print_check(&rep);
        eprintln!("P decay along trajectories: margin {:.3e}: {}", decay.margin, if decay.passed { "pass" } else { "FAIL" });
        ok &= rep.passed() && decay.passed;
        (Some(rep), Some(decay), Some(cert))
    } else {
        (None, None, None)
    };

    let sweep = if a.sweep > 0 {
        let opts = SweepOptions::new(a.epsilon, radius, a.sweep, a.seed);
        let (rep, _) = uniformity_sweep(&sys, cert.as_ref(), &opts, &integ)?;
        print_sweep(&rep);
        ok &= rep.verdict != SweepVerdict::BoundViolated;
        Some(rep)
    } else {
        None
    };

    // Illustration only; its outcome does not affect the exit status.
    let basic = AdaptiveConfig::new(a.gamma, 0.0)?.with_theta(vec![a.theta]).with_theta_hat0(vec![a.theta_hat0]);
    let demo = nonuniformity_demo(&plant, &basic, a.y0, &a.z0, a.epsilon, &demo_integ)?;
    for r in &demo.rows {
        eprintln!(
            "demo L = 0, z0 = {:>5}: T_emp {}, peak |y| {:.4}",
            r.z0,
            r.t_emp.map_or("not converged".into(), |t| format!("{t:.4}")),
            r.peak_output
        );
    }

    if let Some(path) = &a.svg {
        let series = a
            .overlay_theta
            .iter()
            .map(|&theta| -> anyhow::Result<(String, Vec<(f64, f64)>)> {
                let c = cfg.clone().with_theta(vec![theta]);
                let tr = integrate_ode(&plant_loop(&plant, &c)?, &[a.y0, a.theta_hat0], &integ)?;
                let pts = tr.times().iter().zip(tr.outputs()).map(|(t, y)| (*t, y[0])).collect();
                Ok((format!("theta = {theta}"), plot::thin(pts, 4 * PLOT_POINTS)))
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        plot::lines(path, &format!("y(t), L = {l}, gamma = {}", a.gamma), &series)?;
    }

    let config = AdaptiveConfigOut { args: a, controller: &cfg, radius, integrator: &integ, demo_integrator: &demo_integ };
    let body = json!({
        "plant": plant.name(),
        "assumptions": assumptions,
        "certificate_check": certificate,
        "p_decay": decay,
        "sweep": sweep,
        "nonuniformity_demo": demo,
        "passed": ok,
    });
    write_json(a.json.as_deref(), &report("adaptive", config, body)?)?;
    Ok(Status::from_pass(ok))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_strings() {
        assert_eq!(parse_rho("linear:2").unwrap(), ComparisonFn::Linear { c: 2.0 });
        assert_eq!(parse_rho("power:1:3").unwrap(), ComparisonFn::Power { c: 1.0, p: 3.0 });
        assert_eq!(parse_rho("capped:1:0.5").unwrap(), ComparisonFn::Capped { c: 1.0, cap: 0.5 });
        assert!(parse_rho("linear").is_err());
        assert!(parse_rho("linear:x").is_err());
        assert!(parse_rho("linear:-1").is_err());
    }

    #[test]
    fn resample_is_exact_for_linear_data() {
        let t = [0.0, 0.3, 1.0, 2.5];
        let v: Vec<f64> = t.iter().map(|s| 2.0 * s + 1.0).collect();
        let r = resample(&t, &v, 0.5).unwrap();
        assert_eq!(r.len(), 6);
        for (i, x) in r.iter().enumerate() {
            assert!((x - (2.0 * 0.5 * i as f64 + 1.0)).abs() < 1e-12);
        }
        assert!(resample(&[0.0, 1.0, 1.0], &[0.0; 3], 0.1).is_err());
    }
}
