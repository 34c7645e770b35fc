use std::path::Path;
use std::process::{Command, Output};

fn outstab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_outstab")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_decoupled_matches_exponential() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("y.csv");
    let out = outstab(&["simulate", "--system", "decoupled_linear", "--x0", "1", "--tf", "5", "--csv", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x1,y1"));
    let mut rows = 0;
    let mut last_t = 0.0;
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert!((v[2] - (-v[0]).exp()).abs() < 1e-7, "y({}) = {}", v[0], v[2]);
        last_t = v[0];
        rows += 1;
    }
    assert!(rows > 10);
    assert_eq!(last_t, 5.0);
}

#[test]
fn simulate_delay_with_linear_history() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    let out = outstab(&[
        "simulate", "--system", "example2", "--x0", "0.5,0.1", "--x0-past", "0.2,0.1", "--tf", "2", "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("t,x1,x2,y1\n"));
    assert!(text.lines().nth(1).unwrap().starts_with("0.0000000000000000e0,5.0000000000000000e-1"));
}

#[test]
fn certify_exit_codes_follow_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let pass = dir.path().join("pass.json");
    let out = outstab(&[
        "certify", "--system", "example1", "--cert", "example1-thm2", "--samples", "100", "--trajectories", "5",
        "--json", pass.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rep = json(&pass);
    assert_eq!(rep["schema_version"], 1);
    assert_eq!(rep["command"], "certify");
    assert_eq!(rep["overall"], "pass");
    assert_eq!(rep["config"]["check"]["samples"], 100);
    assert!(rep["conditions"].as_array().unwrap().iter().any(|c| c["id"] == "dissipation"));

    let fail = dir.path().join("fail.json");
    let out = outstab(&[
        "certify", "--system", "example1", "--cert", "example1-w-as-thm1", "--samples", "100", "--trajectories", "5",
        "--json", fail.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    // the report is still written on a failed check
    assert_eq!(json(&fail)["overall"], "fail");
}

#[test]
fn certify_retarget_and_mismatch() {
    // the thm2 functions retargeted to the uniform hypotheses must fail
    let out = outstab(&[
        "certify", "--system", "example1", "--cert", "example1-thm2", "--target", "thm1", "--samples", "50",
        "--trajectories", "5",
    ]);
    assert_eq!(code(&out), 1);
    let out = outstab(&["certify", "--system", "example1", "--cert", "example2-cor1"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not apply"));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(code(&outstab(&["sweep", "--bogus"])), 2);
    assert_eq!(code(&outstab(&["simulate", "--system", "nope", "--x0", "1"])), 2);
    assert_eq!(code(&outstab(&["simulate", "--system", "decoupled_linear", "--x0", "1,2"])), 2);
    assert_eq!(code(&outstab(&["barbalat", "--signal", "sin", "--rho", "cubic:1"])), 2);
    assert_eq!(code(&outstab(&["tconv", "--system", "example1", "--cert", "example1-thm2"])), 2);
}

#[test]
fn sweep_report_records_seed_and_bound() {
    let dir = tempfile::tempdir().unwrap();
    let (js, csv, svg) = (dir.path().join("s.json"), dir.path().join("s.csv"), dir.path().join("s.svg"));
    let out = outstab(&[
        "sweep", "--system", "decoupled_linear", "--cert", "decoupled-thm1", "--radius", "10", "--samples", "40",
        "--seed", "17", "--json", js.to_str().unwrap(), "--csv", csv.to_str().unwrap(), "--svg", svg.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rep = json(&js);
    assert_eq!(rep["seed"], 17);
    assert_eq!(rep["config"]["args"]["seed"], 17);
    assert_eq!(rep["verdict"], "uniform-consistent");
    assert_eq!(rep["entries"].as_array().unwrap().len(), 40);
    let t_sup = rep["t_emp_sup"].as_f64().unwrap();
    assert!((t_sup - 10f64.ln() - 10f64.ln()).abs() < 1e-3, "T_emp sup {t_sup}");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("sample_id,x0_1,x0_norm,T_emp\n"));
    assert_eq!(text.lines().count(), 41);
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<svg"));
}

#[test]
fn sweep_is_reproducible_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let p = dir.path().join(name);
        let out = outstab(&[
            "sweep", "--system", "example1", "--samples", "8", "--seed", "5", "--tf", "10", "--csv",
            p.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0);
        std::fs::read_to_string(p).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}

#[test]
fn tconv_reports_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let js = dir.path().join("t.json");
    let out = outstab(&[
        "tconv", "--system", "decoupled_linear", "--cert", "decoupled-thm1", "--epsilon", "0.1", "--radius", "10",
        "--json", js.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let t = json(&js)["t"].as_f64().unwrap();
    assert!(t > 10f64.ln() && t.is_finite());
}

#[test]
fn envelope_table_is_monotone_in_radius() {
    let dir = tempfile::tempdir().unwrap();
    let js = dir.path().join("e.json");
    let out = outstab(&["envelope", "--system", "example1", "--seed", "1", "--per-radius", "5", "--json", js.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let rep = json(&js);
    let zeta: Vec<f64> = rep["zeta"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!(zeta.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(rep["m"].as_array().unwrap().len(), 5);
}

#[test]
fn barbalat_catalog_and_csv_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let js = dir.path().join("b.json");
    let out = outstab(&["barbalat", "--signal", "floor", "--eps", "0.5", "--json", js.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let rep = json(&js);
    assert_eq!(rep["quc"]["entries"][0]["quc"], false);
    assert_eq!(rep["neg_quc"]["entries"][0]["quc"], true);

    // a simulated output, resampled onto a uniform grid
    let csv = dir.path().join("y.csv");
    let out = outstab(&["simulate", "--system", "decoupled_linear", "--x0", "1", "--tf", "30", "--csv", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let out = outstab(&["barbalat", "--signal", csv.to_str().unwrap(), "--json", js.to_str().unwrap()]);
    assert_eq!(code(&out), 2, "adaptive steps are not a uniform grid");
    let out = outstab(&["barbalat", "--signal", csv.to_str().unwrap(), "--dt", "0.01", "--json", js.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rep = json(&js);
    assert_eq!(rep["lemma"]["outcome"], "confirmed");
    assert!((rep["lemma"]["integral"].as_f64().unwrap() - 1.0).abs() < 1e-3);
}

#[test]
fn adaptive_redesigned_passes_and_writes_overlay() {
    let dir = tempfile::tempdir().unwrap();
    let (js, svg) = (dir.path().join("a.json"), dir.path().join("a.svg"));
    let out = outstab(&[
        "adaptive", "--sweep", "30", "--samples", "50", "--trajectories", "5", "--json", js.to_str().unwrap(), "--svg",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rep = json(&js);
    assert_eq!(rep["passed"], true);
    assert_eq!(rep["certificate_check"]["overall"], "pass");
    assert_eq!(rep["sweep"]["verdict"], "uniform-consistent");
    assert_eq!(rep["nonuniformity_demo"]["rows"].as_array().unwrap().len(), 4);
    assert_eq!(rep["config"]["controller"]["L"], 2.0);
    assert!(std::fs::read_to_string(&svg).unwrap().contains("theta = 3"));
}

#[test]
fn list_systems_json_names_every_builtin() {
    let out = outstab(&["list-systems", "--json"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let names: Vec<&str> = v["systems"].as_array().unwrap().iter().map(|s| s["name"].as_str().unwrap()).collect();
    for n in outstab::systems::BUILTIN_NAMES {
        assert!(names.contains(&n), "{n}");
    }
    assert_eq!(v["presets"].as_array().unwrap().len(), outstab::certificates::presets::PRESETS.len());
}

#[test]
fn threads_flag_is_accepted() {
    let out = outstab(&["--threads", "1", "list-systems"]);
    assert_eq!(code(&out), 0);
}
