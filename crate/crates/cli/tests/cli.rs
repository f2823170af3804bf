//! End-to-end tests against the compiled binary: the documented example
//! invocations, the exit-code contract (0 success, 2 refusal, 1 input
//! error), environment overrides, and the construct -> verify loop.

use std::f64::consts::LN_2;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn specs() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("ladder.json"), r#"{"kind": "ladder", "params": {}}"#)
        .unwrap();
    std::fs::write(dir.path().join("zray.json"), r#"{"kind": "zray", "params": {}}"#).unwrap();
    std::fs::write(
        dir.path().join("const_log2.json"),
        format!(r#"{{"depth": 1, "family_rule": {{"kind": "constant", "value": {LN_2}}}}}"#),
    )
    .unwrap();
    dir
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let full: Vec<String> = args
        .iter()
        .map(|a| {
            if a.ends_with(".json") || a.ends_with(".tsv") {
                dir.join(a).to_str().unwrap().to_string()
            } else {
                a.to_string()
            }
        })
        .collect();
    Command::new(env!("CARGO_BIN_EXE_shiftthermo"))
        .args(&full)
        .env_remove("SHIFTTHERMO_N")
        .env_remove("SHIFTTHERMO_D")
        .env_remove("SHIFTTHERMO_TOL")
        .env_remove("SHIFTTHERMO_EPS")
        .env_remove("SHIFTTHERMO_TAU")
        .env_remove("SHIFTTHERMO_THREADS")
        .output()
        .unwrap()
}

fn stdout_of(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}, stderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn tsv_value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}\t")))
        .unwrap_or_else(|| panic!("no row {key:?} in: {text}"))
        .parse()
        .unwrap()
}

#[test]
fn pressure_example_lands_on_zero() {
    let dir = specs();
    let out = run_in(
        dir.path(),
        &["pressure", "--graph", "ladder.json", "--potential", "const_log2.json",
          "--beta", "1", "--N", "60"],
    );
    let text = stdout_of(&out);
    assert!(tsv_value(&text, "p_est").abs() <= 0.02);
    assert_eq!(tsv_value(&text, "n_max"), 60.0);
}

#[test]
fn kms_region_example_brackets_beta_one() {
    let dir = specs();
    let out = run_in(
        dir.path(),
        &["kms-region", "--graph", "ladder.json", "--potential", "const_log2.json",
          "--tol", "1e-3"],
    );
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(doc["region"]["type"], "HALF_LINE");
    assert_eq!(doc["case"], "infinite");
    let beta0 = doc["region"]["beta0"].as_f64().unwrap();
    assert!((0.999..=1.001).contains(&beta0), "beta0 = {beta0}");
    assert!(doc["beta0_lo"].as_f64().unwrap() <= beta0);
    assert!(doc["beta0_hi"].as_f64().unwrap() >= beta0);
    assert!(!doc["samples"].as_array().unwrap().is_empty());
}

#[test]
fn construct_example_emits_the_up_edge_mass() {
    let dir = specs();
    let args = ["construct", "--graph", "ladder.json", "--potential", "const_log2.json",
                "--beta", "2", "--depth", "3"];
    let text = stdout_of(&run_in(dir.path(), &args));
    let row = text
        .lines()
        .find_map(|l| l.strip_prefix("u_0\t"))
        .expect("no u_0 row in the measure dump");
    let logmass: f64 = row.parse().unwrap();
    // the regularized extrapolation carries its documented spread; the
    // escaping-family route nails the exact recursion value
    assert!((logmass - 0.75f64.log10()).abs() <= 1e-3, "log10 m(Z(u_0)) = {logmass}");

    let mut fixed_args = args.to_vec();
    fixed_args.extend(["--method", "fixed"]);
    let text = stdout_of(&run_in(dir.path(), &fixed_args));
    let row = text.lines().find_map(|l| l.strip_prefix("u_0\t")).unwrap();
    let exact: f64 = row.parse::<f64>().unwrap();
    assert!((10f64.powf(exact) - 0.75).abs() <= 1e-6, "fixed-route m(Z(u_0)) off: {exact}");
}

#[test]
fn construct_then_verify_round_trips() {
    let dir = specs();
    let out = run_in(
        dir.path(),
        &["construct", "--graph", "ladder.json", "--potential", "const_log2.json",
          "--beta", "2", "--depth", "3", "--method", "fixed", "--out", "m.tsv"],
    );
    assert!(out.status.success());
    let report = stdout_of(&run_in(
        dir.path(),
        &["verify", "--graph", "ladder.json", "--potential", "const_log2.json",
          "--beta", "2", "--measure", "m.tsv"],
    ));
    let doc: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert!(doc["checked"].as_u64().unwrap() > 20);
    assert!(doc["max_rel"].as_f64().unwrap() <= 1e-9);

    // corrupt one mass and the residual must blow up
    let path = dir.path().join("m.tsv");
    let dump = std::fs::read_to_string(&path).unwrap();
    let bumped: String = dump
        .lines()
        .map(|l| if l.starts_with("u_0\t") { "u_0\t-0.5\n".to_string() } else { format!("{l}\n") })
        .collect();
    std::fs::write(&path, bumped).unwrap();
    let report = stdout_of(&run_in(
        dir.path(),
        &["verify", "--graph", "ladder.json", "--potential", "const_log2.json",
          "--beta", "2", "--measure", "m.tsv"],
    ));
    let doc: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert!(doc["max_rel"].as_f64().unwrap() > 1e-2);
}

#[test]
fn refusals_exit_two_with_their_code() {
    let dir = specs();
    let out = run_in(
        dir.path(),
        &["construct", "--graph", "ladder.json", "--potential", "const_log2.json",
          "--beta", "0.5", "--depth", "3"],
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("error[PRESSURE_POSITIVE]"), "stderr: {err}");

    let out = run_in(dir.path(), &["exp-pressure", "--betas", "0.8", "--nmax", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error[DIVERGENT]"));
}

#[test]
fn bad_input_exits_one() {
    let dir = specs();
    std::fs::write(dir.path().join("broken.json"), "{\"kind\": \"ladder\"").unwrap();
    let out = run_in(
        dir.path(),
        &["pressure", "--graph", "broken.json", "--potential", "const_log2.json"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error[PARSE]"));

    let out = run_in(
        dir.path(),
        &["pressure", "--graph", "missing.json", "--potential", "const_log2.json"],
    );
    assert_eq!(out.status.code(), Some(1));

    let out = run_in(
        dir.path(),
        &["construct", "--graph", "ladder.json", "--potential", "const_log2.json",
          "--method", "psychic"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error[PARAMETER]"));

    // usage errors from the flag parser are input errors too
    let out = run_in(dir.path(), &["pressure", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn analyze_graph_reports_all_cases() {
    let dir = specs();
    let doc: serde_json::Value =
        serde_json::from_str(&stdout_of(&run_in(dir.path(), &["analyze-graph", "--graph", "ladder.json"]))).unwrap();
    assert_eq!(doc["kind"], "ladder");
    assert_eq!(doc["cofinal"], true);
    assert_eq!(doc["nonwandering"]["case"], "infinite");

    let doc: serde_json::Value =
        serde_json::from_str(&stdout_of(&run_in(dir.path(), &["analyze-graph", "--graph", "zray.json"]))).unwrap();
    assert_eq!(doc["nonwandering"]["case"], "empty");
}

#[test]
fn environment_overrides_the_horizon() {
    let dir = specs();
    let out = Command::new(env!("CARGO_BIN_EXE_shiftthermo"))
        .args([
            "pressure",
            "--graph",
            dir.path().join("ladder.json").to_str().unwrap(),
            "--potential",
            dir.path().join("const_log2.json").to_str().unwrap(),
        ])
        .env("SHIFTTHERMO_N", "24")
        .output()
        .unwrap();
    let text = stdout_of(&out);
    assert_eq!(tsv_value(&text, "n_max"), 24.0);
}

#[test]
fn version_prints_the_parameter_fingerprint() {
    let out = run_in(Path::new("."), &["--version"]);
    let text = stdout_of(&out);
    assert!(text.contains("N=60") && text.contains("tol=1e-3"), "fingerprint: {text}");
}

#[test]
fn oracle_dump_carries_the_reference_values() {
    let dir = specs();
    let text = stdout_of(&run_in(dir.path(), &["oracle"]));
    let moran: f64 = text
        .lines()
        .find(|l| l.contains("2^-b + 4^-b"))
        .and_then(|l| l.split('\t').nth(1))
        .unwrap()
        .parse()
        .unwrap();
    assert!((moran - 0.6942419136306173).abs() <= 1e-9);
    assert!(text.lines().any(|l| l.starts_with("enumerate_periodic\t3\t")));
}
