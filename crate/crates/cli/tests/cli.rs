use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nnloc"))
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str], config: Option<&Path>) -> Output {
    let mut c = bin();
    c.args(args);
    if let Some(p) = config {
        c.arg("--config").arg(p);
    }
    c.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a CSV report, split into cells.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn meta<'a>(text: &'a str, key: &str) -> &'a str {
    let prefix = format!("# {key}: ");
    text.lines()
        .find_map(|l| l.strip_prefix(prefix.as_str()))
        .unwrap_or_else(|| panic!("no {key} line in\n{text}"))
}

fn g_at_zero(loss: &str) -> f64 {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "c.json",
        &format!(
            r#"{{"schema": 1, "n": 1, "loss": {loss}, "estimators": [{{"kind": "gen_bayes", "l": 0}}],
                "y_grid": {{"values": [-1, 0, 1]}}}}"#
        ),
    );
    let o = run(&["g-table"], Some(&cfg));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(meta(&text, "table l=0").contains("right_limit=0.0000000000000000e0"));
    let r = rows(&text);
    r[1][2].parse().unwrap()
}

#[test]
fn g_table_matches_closed_forms() {
    assert!((g_at_zero(r#"{"kind": "power", "p": 2}"#) - 2.0 / std::f64::consts::PI).abs() < 1e-8);
    assert!((g_at_zero(r#"{"kind": "power", "p": 1}"#) - 1.0 / 3f64.sqrt()).abs() < 1e-8);
}

#[test]
fn g_table_reports_divergence_with_exit_3() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "c.json",
        r#"{"schema": 1, "n": 2, "model": {"kind": "student", "params": {"nu": 3}},
            "loss": {"kind": "asym_power", "p": 2, "c1": 1, "c2": 2},
            "estimators": [{"kind": "gen_bayes", "l": 1}], "y_grid": {"values": [0, 1]}}"#,
    );
    let o = run(&["g-table"], Some(&cfg));
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("l = 1"));
}

#[test]
fn estimate_on_two_points() {
    let dir = TempDir::new().unwrap();
    let sample = write(&dir, "s.csv", "value\n0\n2\n");
    let cfg = write(&dir, "c.json", r#"{"schema": 1, "estimators": [{"kind": "mre"}]}"#);
    let o = run(&["estimate", "--sample", sample.to_str().unwrap()], Some(&cfg));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&stdout(&o));
    let mu: f64 = r[0][3].parse().unwrap();
    let theta: f64 = r[0][4].parse().unwrap();
    assert!((mu - 2f64.sqrt()).abs() < 1e-15);
    assert!((theta - 1.0).abs() < 1e-15);
}

#[test]
fn density_check_exit_codes() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run(&["density-check"], None).status.code(), Some(0));
    let student = write(
        &dir,
        "t.json",
        r#"{"schema": 1, "n": 3, "model": {"kind": "student", "params": {"nu": 1}}}"#,
    );
    assert_eq!(run(&["density-check"], Some(&student)).status.code(), Some(0));
    let rising = write(
        &dir,
        "r.json",
        r#"{"schema": 1, "model": {"kind": "custom", "params": {"power": 1, "rate": 1, "shape": 1}}}"#,
    );
    let o = run(&["density-check"], Some(&rising));
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(meta(&stdout(&o), "passed"), "false");
}

#[test]
fn malformed_configs_exit_1() {
    let dir = TempDir::new().unwrap();
    for (i, text) in [
        r#"{"schema": 1, "colour": 3}"#,
        r#"{"n": 2}"#,
        r#"{"schema": 7}"#,
        r#"{"schema": 1, "n": 0}"#,
        r#"{"schema": 1, "loss": {"kind": "power", "p": -1}}"#,
        "not json",
    ]
    .iter()
    .enumerate()
    {
        let cfg = write(&dir, &format!("b{i}.json"), text);
        let o = run(&["density-check"], Some(&cfg));
        assert_eq!(o.status.code(), Some(1), "{text}");
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    }
    assert_eq!(run(&["no-such-command"], None).status.code(), Some(1));
}

#[test]
fn suite_tightened_tolerance_exits_4() {
    let o = run(&["suite", "--rel-tol", "1e-15"], None);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn suite_filter_runs_one_criterion() {
    let o = run(&["suite", "--tag", "closed-form", "--format", "json"], None);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let results = v["result"]["results"].as_array().unwrap();
    assert_eq!(results.len(), 1);
    assert_eq!(results[0]["tag"], "closed-form");
    assert_eq!(results[0]["passed"], true);
}

#[test]
fn dominance_under_squared_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "d.json",
        r#"{"schema": 1, "n": 3, "estimators": [{"kind": "gen_bayes", "l": 0}, {"kind": "mre"}],
            "lambda_grid": {"values": [0, 0.5, 1, 2]}}"#,
    );
    let o = run(&["dominance"], Some(&cfg));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(meta(&text, "no_worse"), "true");
    let verdicts: Vec<String> = rows(&text).into_iter().map(|r| r[5].clone()).collect();
    // the risks coincide at the boundary
    assert_eq!(verdicts, ["indeterminate", "dominates", "dominates", "dominates"]);
}

#[test]
fn diagnostics_psi_vanishes_at_zero() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "g.json",
        r#"{"schema": 1, "n": 3, "lambda_grid": {"values": [0, 0.001, 0.01, 0.1, 0.5, 2]},
            "y_grid": {"values": [-1, 0, 1.5]}}"#,
    );
    let o = run(&["diagnostics"], Some(&cfg));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(meta(&text, "passed"), "true");
    let at_zero: Vec<f64> = rows(&text)
        .into_iter()
        .filter(|r| r[0] == "psi" && r[2].parse::<f64>().unwrap() == 0.0)
        .map(|r| r[3].parse().unwrap())
        .collect();
    assert_eq!(at_zero.len(), 3);
    assert!(at_zero.iter().all(|v| v.abs() < 1e-8), "{at_zero:?}");
}

#[test]
fn identical_runs_give_identical_files() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "m.json",
        r#"{"schema": 1, "n": 3, "loss": {"kind": "power", "p": 0.5},
            "estimators": [{"kind": "truncated_mre"}, {"kind": "mre"}],
            "lambda_grid": {"values": [0, 1]}, "tolerances": {"mc_reps": 20000}}"#,
    );
    let out = dir.path().join("risk.csv");
    let mut texts = Vec::new();
    for seed in ["7", "7", "8"] {
        let o = run(&["risk-curve", "--seed", seed, "--out", out.to_str().unwrap()], Some(&cfg));
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        texts.push(std::fs::read_to_string(&out).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
    assert_ne!(texts[0], texts[2]);
    assert_eq!(meta(&texts[0], "method"), "monte_carlo");
}

#[test]
fn outputs_embed_the_resolved_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.json", r#"{"schema": 1, "n": 2, "lambda_grid": {"values": [0.5]}}"#);
    let o = run(&["risk-curve", "--format", "json", "--seed", "11"], Some(&cfg));
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["config"]["n"], 2);
    assert_eq!(v["config"]["seed"], 11);
    assert_eq!(v["config"]["schema"], 1);
    let csv = stdout(&run(&["risk-curve"], Some(&cfg)));
    let line = meta(&csv, "config");
    let back: serde_json::Value = serde_json::from_str(line).unwrap();
    assert_eq!(back["lambda_grid"]["values"][0], 0.5);
}
