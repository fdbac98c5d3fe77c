use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const HAND_SYSTEM: &str = r#"{
  "n_vars": 2, "degree": 2, "regime": "exact",
  "coefficients": [
    {"equation": 1, "exponents": [2, 0], "re": "1", "im": "0"},
    {"equation": 1, "exponents": [1, 1], "re": "1", "im": "0"},
    {"equation": 1, "exponents": [0, 2], "re": "1", "im": "0"},
    {"equation": 2, "exponents": [2, 0], "re": "2", "im": "0"},
    {"equation": 2, "exponents": [0, 2], "re": "1", "im": "0"}
  ]
}"#;

const ONES: &str = r#"[{"re": "1", "im": "0"}, {"re": "1", "im": "0"}]"#;

fn homdiff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_homdiff"))
        .args(args)
        .env("NO_COLOR", "1")
        .output()
        .expect("run homdiff")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn enumerate_lists_descending_lex() {
    let out = homdiff(&["enumerate", "2", "4"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "4 0\n3 1\n2 2\n1 3\n0 4\n");
}

#[test]
fn generate_then_verify() {
    let dir = TempDir::new().unwrap();
    let inst = dir.path().join("inst.json");
    let inst = inst.to_str().unwrap();
    let out = homdiff(&[
        "generate",
        "--n",
        "3",
        "--m",
        "3",
        "--seed",
        "9",
        "--density",
        "0.5",
        "--out",
        inst,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = homdiff(&["verify", "--instance", inst, "--horizon", "4"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("verdict: exact-match"));

    let out = homdiff(&["--regime", "float", "verify", "--instance", inst, "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["verdict"], "within-tolerance");
    assert_eq!(report["regime"], "float");
}

#[test]
fn broken_instance_exits_with_mismatch() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("inst.json");
    let out = homdiff(&[
        "generate",
        "--n",
        "2",
        "--m",
        "2",
        "--seed",
        "1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let mut doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    doc["system"]["coefficients"][0]["re"] = "1001/1000".into();
    fs::write(&path, doc.to_string()).unwrap();
    let out = homdiff(&["verify", "--instance", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("first mismatch: step 1"));
}

#[test]
fn input_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"n_vars": 2, "degree": 2, "regime": "exact", "coefficients": [], "x": 1}"#,
    );
    let init = write(dir.path(), "init.json", ONES);
    let out = homdiff(&["iterate", "--system", &bad, "--init", &init, "--steps", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let out = homdiff(&["verify", "--instance", "/nonexistent/instance.json"]);
    assert_eq!(out.status.code(), Some(2));
    let out = homdiff(&["enumerate", "two", "4"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn iterate_and_closed_form_agree() {
    let dir = TempDir::new().unwrap();
    let sys = write(dir.path(), "sys.json", HAND_SYSTEM);
    let init = write(dir.path(), "init.json", ONES);
    let it = homdiff(&[
        "iterate",
        "--system",
        &sys,
        "--init",
        &init,
        "--steps",
        "2",
        "--rational",
    ]);
    assert!(it.status.success(), "{}", String::from_utf8_lossy(&it.stderr));
    assert_eq!(
        stdout(&it),
        "step,re_z1,im_z1,re_z2,im_z2\n0,1,0,1,0\n1,3,0,3,0\n2,27,0,27,0\n"
    );

    let cf = homdiff(&[
        "closed-form",
        "--init",
        &init,
        "--z",
        "3",
        "--m",
        "2",
        "--steps",
        "2",
        "--rational",
    ]);
    assert!(cf.status.success());
    assert_eq!(stdout(&cf), stdout(&it));

    let csv = dir.path().join("out.csv");
    let out = homdiff(&[
        "iterate",
        "--system",
        &sys,
        "--init",
        &init,
        "--steps",
        "1",
        "--digits",
        "2",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(
        fs::read_to_string(&csv).unwrap(),
        "step,re_z1,im_z1,re_z2,im_z2\n0,1.00,0.00,1.00,0.00\n1,3.00,0.00,3.00,0.00\n"
    );
}

#[test]
fn solve_linear_modes() {
    let dir = TempDir::new().unwrap();
    let sys = write(dir.path(), "sys.json", HAND_SYSTEM);
    let spec = write(
        dir.path(),
        "spec.json",
        r#"{"mode": "z-pivot", "pivot_equation": 2,
            "designated": [{"equation": 1, "exponents": [0, 2]}],
            "init": [{"re": "1", "im": "0"}, {"re": "1", "im": "0"}]}"#,
    );
    let out = homdiff(&["solve", "--system", &sys, "--spec", &spec]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let inst: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(inst["Z"]["re"], "3");
    assert_eq!(inst["certificate"]["max_residual"], 0.0);
    assert_eq!(inst["certificate"]["mode"], "z-pivot");

    let spec = write(
        dir.path(),
        "coef.json",
        r#"{"mode": "coefficients", "Z": {"re": "1/2", "im": "1"},
            "designated": [{"equation": 1, "exponents": [0, 2]}, {"equation": 2, "exponents": [1, 1]}],
            "init": [{"re": "2", "im": "0"}, {"re": "-1", "im": "0"}]}"#,
    );
    let inst_path = dir.path().join("inst.json");
    let out = homdiff(&[
        "solve",
        "--system",
        &sys,
        "--spec",
        &spec,
        "--out",
        inst_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = homdiff(&["verify", "--instance", inst_path.to_str().unwrap(), "--horizon", "4"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}

#[test]
fn solve_newton_mode() {
    let dir = TempDir::new().unwrap();
    let sys = write(dir.path(), "sys.json", HAND_SYSTEM);
    let spec = write(
        dir.path(),
        "newton.json",
        r#"{"mode": "newton", "guess": {"Z": {"re": 2.9, "im": 0.05}, "ratios": [{"re": 1.05, "im": -0.02}]}}"#,
    );
    let out = homdiff(&["solve", "--system", &sys, "--spec", &spec]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let inst: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(inst["system"]["regime"], "float");
    assert!(inst["certificate"]["max_residual"].as_f64().unwrap() <= 1e-12 * 4.0);
}

#[test]
fn solver_failures_exit_three() {
    let dir = TempDir::new().unwrap();
    // F = (Z r - r, Z): singular Jacobian at Z = 1.
    let sys = write(
        dir.path(),
        "sys.json",
        r#"{"n_vars": 2, "degree": 2, "regime": "float",
            "coefficients": [{"equation": 1, "exponents": [1, 1], "re": 1.0, "im": 0.0}]}"#,
    );
    let spec = write(
        dir.path(),
        "spec.json",
        r#"{"mode": "newton", "guess": {"Z": {"re": 1.0, "im": 0.0}, "ratios": [{"re": 2.0, "im": 0.0}]}}"#,
    );
    let out = homdiff(&["solve", "--system", &sys, "--spec", &spec]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("singular Jacobian"));

    let hand = write(dir.path(), "hand.json", HAND_SYSTEM);
    let zero_monomial = write(
        dir.path(),
        "zm.json",
        r#"{"mode": "coefficients", "Z": {"re": "1", "im": "0"},
            "designated": [{"equation": 1, "exponents": [2, 0]}, {"equation": 2, "exponents": [0, 2]}],
            "init": [{"re": "0", "im": "0"}, {"re": "1", "im": "0"}]}"#,
    );
    let out = homdiff(&["solve", "--system", &hand, "--spec", &zero_monomial]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn example_subcommand() {
    let out = homdiff(&["example"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.matches("exact-match to horizon 4").count(), 2);
    assert!(text.contains("coefficients: 10"));

    let out = homdiff(&["example", "--json"]);
    let both: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(
        both["coefficients"]["system"]["coefficients"].as_array().unwrap().len(),
        10
    );
    assert_eq!(both["z_pivot"]["certificate"]["mode"], "z-pivot");
}
