use std::path::Path;
use std::process::{Command, Output};

use heisenberg_cli::{read_csv_rows, CurvatureRow, DiscontinuityRow, PositivityRow, Report, VanishRow};
use serde_json::Value;

fn heisenberg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heisenberg")).args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = heisenberg(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn arc() -> f64 {
    (2f64.sqrt() + 1f64.asinh()) / 2.0
}

#[test]
fn vanish_table() {
    let text = stdout(&["vanish", "--modes", "1,4,16", "--nodes", "32"]);
    let report: Report<VanishRow> = serde_json::from_str(&text).unwrap();
    assert_eq!(report.config.command, "vanish");
    assert_eq!(report.config.parameters["nodes"], 32);
    let constant = 2.0 * 3f64.sqrt() * arc();
    for row in &report.rows {
        assert!((row.analytic_bound - constant / (row.n as f64).sqrt()).abs() < 1e-12);
        assert!(row.optimizer_bound <= row.analytic_bound + 1e-6);
        assert_eq!(row.lower_bound, 0.0);
    }
    assert!(report.rows.windows(2).all(|w| w[1].optimizer_bound <= w[0].optimizer_bound));
}

#[test]
fn csv_matches_json_and_runs_repeat() {
    let args = ["vanish", "--modes", "2,8", "--nodes", "16", "--seed", "5"];
    let json = stdout(&args);
    assert_eq!(json, stdout(&args));
    let report: Report<VanishRow> = serde_json::from_str(&json).unwrap();
    let csv_args: Vec<&str> = args.iter().copied().chain(["--format", "csv"]).collect();
    let csv = stdout(&csv_args);
    assert!(csv.starts_with("# {"));
    let rows: Vec<VanishRow> = read_csv_rows(&csv).unwrap();
    assert_eq!(rows, report.rows);
}

#[test]
fn positivity_defaults() {
    let report: Report<PositivityRow> = serde_json::from_str(&stdout(&["positivity"])).unwrap();
    assert_eq!(report.rows[0].lower_bound, 1.0);
    assert!((report.rows[0].subriemannian_upper - 1.0).abs() < 1e-3);
    assert!((report.rows[1].lower_bound - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    assert!(report.rows.iter().all(|r| r.sandwich));
}

#[test]
fn positivity_rejects_equal_horizontal_parts() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pairs.json");
    let p = r#"{"h1":[[2,1.0]],"h2":[],"t":0.0}"#;
    let q = r#"{"h1":[[2,1.0]],"h2":[],"t":4.0}"#;
    std::fs::write(&path, format!("[[{p},{q}]]")).unwrap();
    let out = heisenberg(&["positivity", "--pairs", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn curvature_sweep_rows() {
    let text = stdout(&["curvature-sweep", "--j-max", "10", "--format", "csv"]);
    let rows: Vec<CurvatureRow> = read_csv_rows(&text).unwrap();
    assert_eq!(rows.len(), 10);
    let close = |a: f64, b: f64| (a - b).abs() < 1e-9;
    assert!(close(rows[0].k_a1_a2, -3.0) && close(rows[0].k_a1_e3, 1.0) && close(rows[0].k_a2_e3, 1.0));
    assert!(close(rows[9].k_a1_a2, -300.0) && close(rows[9].k_a1_e3, 100.0) && close(rows[9].k_a2_e3, 100.0));
    for row in &rows[..3] {
        for (k, oracle) in [
            (row.k_a1_a2, row.oracle_a1_a2),
            (row.k_a1_e3, row.oracle_a1_e3),
            (row.k_a2_e3, row.oracle_a2_e3),
        ] {
            assert!((k - oracle.unwrap()).abs() <= 1e-3 * k.abs());
        }
    }
    assert!(rows[3].oracle_a1_a2.is_none());
}

#[test]
fn discontinuity_rows() {
    let text = stdout(&["discontinuity", "--k", "1,2,100", "--tail", "100000", "--depth", "16"]);
    let report: Report<DiscontinuityRow> = serde_json::from_str(&text).unwrap();
    let rows = &report.rows;
    assert!((rows[0].curvature.unwrap() - 1.0).abs() < 1e-12);
    assert!((rows[1].curvature.unwrap() - 4.0 / 3.0).abs() < 1e-12);
    assert!(rows[2].principal_angle < rows[1].principal_angle);
    assert_eq!(rows[3].label, "W");
    assert_eq!(rows[3].verdict.as_deref(), Some("divergent"));
    let out = heisenberg(&["discontinuity", "--k", "5,2"]);
    assert_eq!(out.status.code(), Some(2));
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn distance_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let from = write(dir.path(), "from.json", r#"{"h1":[],"h2":[],"t":0.0}"#);
    let to = write(dir.path(), "to.json", r#"{"h1":[],"h2":[],"t":1.0}"#);
    let out = dir.path().join("report.json");
    let args = [
        "distance", "--from", &from, "--to", &to, "--metric", "subriem", "--modes", "4", "--nodes", "16", "--seed", "3",
        "--out", out.to_str().unwrap(),
    ];
    assert!(stdout(&args).is_empty());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let result = &doc["result"];
    for field in ["upper_bound", "lower_bound", "iterations", "converged", "endpoint_error", "path", "metric", "modes", "nodes", "seed"] {
        assert!(!result[field].is_null(), "missing {field}");
    }
    assert_eq!(doc["config"]["parameters"]["seed"], 3);
    assert_eq!(result["metric"], "subriem");
    assert_eq!(result["path"].as_array().unwrap().len(), 17);
    let upper = result["upper_bound"].as_f64().unwrap();
    assert!(upper <= 2.0 * 3f64.sqrt() * arc() / 2.0 + 1e-6);
}

#[test]
fn distance_rejects_small_budget() {
    let dir = tempfile::tempdir().unwrap();
    let from = write(dir.path(), "from.json", r#"{"h1":[],"h2":[],"t":0.0}"#);
    let to = write(dir.path(), "to.json", r#"{"h1":[[9,1.0]],"h2":[],"t":0.0}"#);
    let out = heisenberg(&["distance", "--from", &from, "--to", &to, "--modes", "4"]);
    assert_eq!(out.status.code(), Some(2));
    let bad = write(dir.path(), "bad.json", r#"{"h1":[[0,1.0]],"h2":[],"t":0.0}"#);
    let out = heisenberg(&["distance", "--from", &from, "--to", &bad]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn length_and_sample() {
    let doc: Value = serde_json::from_str(&stdout(&["length", "--family", "gamma", "--n", "4", "--c", "1"])).unwrap();
    let value = doc["rows"][0]["value"].as_f64().unwrap();
    assert!((value - arc() / 2.0).abs() < 1e-10);
    let out = heisenberg(&["length", "--order", "1"]);
    assert_eq!(out.status.code(), Some(2));

    let csv = stdout(&["sample", "--n", "2", "--count", "3"]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,h1,h2,tau,residual");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("1,,,0.333333333333333"));
}

#[test]
fn curvature_command() {
    let doc: Value = serde_json::from_str(&stdout(&["curvature", "--plane", "a1j,e3", "--j", "5"])).unwrap();
    assert!((doc["result"]["k"].as_f64().unwrap() - 25.0).abs() < 1e-9);
    for key in ["delta", "arnold_beta", "arnold_alpha", "b_x", "b_y"] {
        assert!(doc["result"][key].is_object(), "missing {key}");
    }
    let doc: Value = serde_json::from_str(&stdout(&["curvature", "--wk", "2"])).unwrap();
    assert!((doc["result"]["curvature"].as_f64().unwrap() - 4.0 / 3.0).abs() < 1e-12);
    let doc: Value = serde_json::from_str(&stdout(&["curvature", "--probe", "W", "--depth", "20"])).unwrap();
    assert_eq!(doc["result"]["verdict"], "divergent");
    let doc: Value = serde_json::from_str(&stdout(&["curvature", "--oracle", "--truncation", "3", "--seed", "1"])).unwrap();
    assert!(doc["result"]["relative_gap"].as_f64().unwrap() < 1e-3);
}

#[test]
fn exit_codes() {
    assert_eq!(heisenberg(&["curvature", "--probe", "W", "--numeric", "--depth", "4"]).status.code(), Some(3));
    assert_eq!(heisenberg(&["curvature", "--plane", "a1j,a1j"]).status.code(), Some(2));
    assert_eq!(heisenberg(&["curvature"]).status.code(), Some(2));
    assert_eq!(heisenberg(&["vanish", "--s", "-1"]).status.code(), Some(2));
    assert_eq!(heisenberg(&["curvature", "--wk", "3", "--format", "csv"]).status.code(), Some(2));
}
