use serde_json::Value;
use std::process::{Command, Output};

fn qspforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qspforge"))
        .args(args)
        .env_remove("QSPFORGE_CONFIG")
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

fn tmp(name: &str) -> std::path::PathBuf {
    std::env::temp_dir().join(format!("qspforge-cli-{}-{name}", std::process::id()))
}

#[test]
fn synth_su11_linear_target() {
    let out = qspforge(&["synth-su11", "--target", r#"{"coeffs":[[-0.5,0],[1,0]]}"#]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    let nu = &v["nu"][0];
    assert!((f(&nu[0]) - 0.5).abs() < 1e-12 && f(&nu[1]).abs() < 1e-12);
    assert!((f(&v["theta"][0]) - 0.5f64.atanh()).abs() < 1e-12);
    assert!(v["phi"].is_array());
}

#[test]
fn families_hermite_closed_forms() {
    let out = qspforge(&["families", "--name", "hermite", "--gamma", "2", "--n", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    let pi = std::f64::consts::PI;
    let cot: Vec<f64> = v["cot_omega"].as_array().unwrap().iter().map(f).collect();
    assert!((cot[0] - 2.0 * (2.0 / pi).sqrt()).abs() < 1e-12);
    assert!((cot[1] - 2.0 * (pi / 2.0).sqrt()).abs() < 1e-12);
    assert!((cot[2] - (2.0 / pi).sqrt()).abs() < 1e-12);
    assert_eq!(v["recurrence"]["a_sq"].as_array().unwrap().len(), 3);
    assert_eq!(v["polys"].as_array().unwrap().len(), 5);
}

#[test]
fn families_missing_parameter_is_malformed() {
    let out = qspforge(&["families", "--name", "chebyshev", "--gamma", "1", "--n", "3"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json_of(&out)["code"], "InvalidInput");
}

#[test]
fn verify_mismatch_exits_two() {
    let out = qspforge(&[
        "verify",
        "--variant",
        "gqsp",
        "--angles",
        r#"{"theta":[0,0,0],"phi":[0,0,0]}"#,
        "--target",
        r#"{"coeffs":[[0,0],[0,0],[1,0]]}"#,
    ]);
    assert_eq!(out.status.code(), Some(2));
    let v = json_of(&out);
    assert_eq!(v["code"], "ReconstructionMismatch");
    assert!(f(&v["context"]["max_coeff_err"]) > 0.5);
    assert!(v["message"].is_string());
}

#[test]
fn verify_matching_target_and_gate_level() {
    let out = qspforge(&[
        "verify",
        "--variant",
        "gqsp",
        "--angles",
        r#"{"theta":[0,0,0],"phi":[0,0,0]}"#,
        "--target",
        r#"{"coeffs":[[0,0],[0,0],[0,0],[1,0]]}"#,
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(f(&json_of(&out)["transfer"]["max_coeff_err"]) <= 1e-14);
    let out = qspforge(&[
        "verify",
        "--variant",
        "su11",
        "--angles",
        r#"{"nu":[[0.3,0.1],[-0.2,0.4]]}"#,
        "--eigenphases",
        "[0.1, 2.0, -1.3]",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(f(&json_of(&out)["gate"]["max_coeff_err"]) <= 1e-10);
}

#[test]
fn malformed_input_exits_one() {
    let out = qspforge(&["synth-su11", "--target", r#"{"coeffs":[[1,0]],"extra":true}"#]);
    assert_eq!(out.status.code(), Some(1));
    let out = qspforge(&["synth-su11", "--target", "{not json"]);
    assert_eq!(out.status.code(), Some(1));
    let out = qspforge(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));
    let out = qspforge(&["verify", "--variant", "opqsp", "--angles", r#"{"tau":[0.1],"omega":[0.4, 0.5]}"#, "--eigenphases", "[0]"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn domain_error_carries_context() {
    let out = qspforge(&["synth-su11", "--target", r#"{"coeffs":[[-2,0],[1,0]]}"#]);
    assert_eq!(out.status.code(), Some(2));
    let v = json_of(&out);
    assert_eq!(v["code"], "RootOnOrOutsideDisk");
    assert!((f(&v["context"]["modulus"]) - 2.0).abs() < 1e-9);
}

#[test]
fn dump_flags() {
    let out = qspforge(&[
        "synth-opqsp",
        "--target",
        r#"{"coeffs":[[0,0],[-1,0],[0,0],[1,0]]}"#,
        "--dump-moments",
        "--dump-determinants",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["moments"].as_array().unwrap().len(), 6);
    assert!(v["determinants"].is_array());
    let out = qspforge(&["synth-su11", "--target", r#"{"coeffs":[[0.1,0],[-0.2,0.1],[1,0]]}"#, "--dump-determinants"]);
    assert_eq!(json_of(&out)["determinants"].as_array().unwrap().len(), 2);
    assert!(json_of(&out).get("moments").is_none());
}

#[test]
fn output_is_deterministic() {
    let args = ["property-suite", "--variant", "gqsp", "--ensemble-size", "12", "--n-max", "5", "--seed", "3"];
    let a = qspforge(&args);
    let b = qspforge(&["--threads", "2", "property-suite", "--variant", "gqsp", "--ensemble-size", "12", "--n-max", "5", "--seed", "3"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn job_spec_matches_flags() {
    let direct = qspforge(&["families", "--name", "jacobi-shifted", "--lambda", "0.5", "--n", "3"]);
    let job = r#"{"schema":1,"command":"families","args":{"name":"jacobi-shifted","lambda":0.5,"n":3}}"#;
    let via_job = qspforge(&["--job", job]);
    assert_eq!(via_job.status.code(), Some(0));
    assert_eq!(direct.stdout, via_job.stdout);

    let bad_field = qspforge(&["--job", r#"{"schema":1,"command":"families","args":{},"colour":1}"#]);
    assert_eq!(bad_field.status.code(), Some(1));
    let seeded = qspforge(&["--job", r#"{"schema":1,"command":"families","args":{"name":"jacobi-shifted","lambda":0.5,"n":3},"seed":4}"#]);
    assert_eq!(seeded.stdout, direct.stdout);

    let bad_schema = qspforge(&["--job", r#"{"schema":2,"command":"families","args":{}}"#]);
    assert_eq!(bad_schema.status.code(), Some(1));
}

#[test]
fn job_tolerance_override_and_seed() {
    let job = r#"{"schema":1,"command":"verify","args":{"variant":"gqsp","angles":{"theta":[0,0],"phi":[0,0]},"target":{"coeffs":[[1e-6,0],[0,0],[1,0]]}},"tolerances":{"rebuild_tol":1e-3}}"#;
    let out = qspforge(&["--job", job]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let job = r#"{"schema":1,"command":"property-suite","args":{"variant":"su11","ensemble_size":4,"n_max":3},"seed":9}"#;
    let a = qspforge(&["--job", job]);
    let b = qspforge(&["property-suite", "--variant", "su11", "--ensemble-size", "4", "--n-max", "3", "--seed", "9"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn config_file_from_environment() {
    let path = tmp("tol.json");
    std::fs::write(&path, r#"{"rebuild_tol": 2.0}"#).unwrap();
    let args = [
        "verify",
        "--variant",
        "gqsp",
        "--angles",
        r#"{"theta":[0,0,0],"phi":[0,0,0]}"#,
        "--target",
        r#"{"coeffs":[[0,0],[0,0],[1,0]]}"#,
    ];
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_qspforge")).args(args).env("QSPFORGE_CONFIG", &path).output().unwrap()
    };
    assert_eq!(run().status.code(), Some(0));
    std::fs::write(&path, r#"{"rebuild_tol": 2.0, "mystery_tol": 1}"#).unwrap();
    assert_eq!(run().status.code(), Some(1));
    std::fs::remove_file(&path).ok();
}

#[test]
fn output_file() {
    let path = tmp("out.json");
    let out = qspforge(&["--output", path.to_str().unwrap(), "families", "--name", "hermite", "--gamma", "1.5", "--n", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["n"], 2);
    std::fs::remove_file(&path).ok();
}

#[test]
fn expand_lcu_paths() {
    let out = qspforge(&[
        "expand-lcu",
        "--basis",
        r#"{"kind":"monomial","n":2}"#,
        "--target",
        r#"{"coeffs":[[0,0],[0,0],[1,0]]}"#,
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(f(&v["plan"]["v"][2][0]), 1.0);
    let out = qspforge(&["expand-lcu", "--basis", r#"{"kind":"monomial","n":1}"#, "--target", r#"{"coeffs":[[0,0],[0,0],[1,0]]}"#]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json_of(&out)["code"], "DegreeExceedsBasis");
    let out = qspforge(&["expand-lcu", "--function", r#"{"name":"exp_gauss","center":1}"#, "--gamma", "2", "--n", "6"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["resources"]["ancillas"], 13);
}

#[test]
fn bivariate_counterexample() {
    let out = qspforge(&["bivariate-check", "--counterexample", "corrected"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["verdict"], "fail");
}

#[test]
fn help_exits_zero() {
    assert_eq!(qspforge(&["--help"]).status.code(), Some(0));
}
