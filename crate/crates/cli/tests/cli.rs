//! End-to-end tests of the `swipt` binary: exit codes, file formats,
//! determinism, and the config-echo round trip.

use std::path::Path;
use std::process::{Command, Output};

fn swipt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swipt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn cell(rows: &[Vec<String>], i: usize, j: usize) -> f64 {
    rows[i][j].parse().unwrap()
}

#[test]
fn chi_table_passes_reference_check_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("a.csv");
    let out2 = dir.path().join("b.csv");
    let run1 = swipt(&["chi-table", "--out", out1.to_str().unwrap()]);
    let run2 = swipt(&["chi-table", "--out", out2.to_str().unwrap()]);
    assert!(run1.status.success(), "{}", stderr(&run1));
    assert!(run2.status.success());
    let t1 = std::fs::read(&out1).unwrap();
    let t2 = std::fs::read(&out2).unwrap();
    assert_eq!(t1, t2);
    let rows = data_rows(std::str::from_utf8(&t1).unwrap());
    assert_eq!(rows.len(), 30);
    // First entry of every block is the wall-free angular factor pi/2.
    for block in rows.chunks(6) {
        assert!((cell(block, 0, 2) - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }
    assert!(!dir.path().join(".a.csv.tmp").exists());
}

#[test]
fn chi_table_zero_walls_column() {
    let run = swipt(&["chi-table", "--lambda-w", "0", "--eta-max", "3"]);
    assert!(run.status.success());
    let rows = data_rows(&stdout(&run));
    assert!((cell(&rows, 0, 2) - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    for i in 1..4 {
        assert_eq!(cell(&rows, i, 2), 0.0);
    }
}

#[test]
fn unknown_config_key_is_exit_2_and_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "params.lambda_q = 3\n").unwrap();
    let run = swipt(&["chi-table", "--config", cfg.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
    assert!(stderr(&run).contains("params.lambda_q"), "{}", stderr(&run));
}

#[test]
fn invalid_param_value_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "params.rho = 1.5\n").unwrap();
    let run = swipt(&["chi-table", "--config", cfg.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
    let run = swipt(&["simulate", "--level", "2.0", "--rates", "100", "--powers", "-20"]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn analyze_minloss_starts_near_zero_and_increases() {
    let run = swipt(&["analyze", "--mode", "minloss", "--points", "12"]);
    assert!(run.status.success(), "{}", stderr(&run));
    let rows = data_rows(&stdout(&run));
    assert_eq!(rows.len(), 12);
    assert!(cell(&rows, 0, 1) < 1e-2);
    for i in 1..rows.len() {
        assert!(cell(&rows, i, 1) >= cell(&rows, i - 1, 1) - 1e-12);
    }
}

#[test]
fn analyze_jccdf_grid_is_monotone_both_axes() {
    let run = swipt(&[
        "analyze",
        "--mode",
        "jccdf",
        "--rates",
        "100,300",
        "--powers",
        "-30,-20",
    ]);
    assert!(run.status.success(), "{}", stderr(&run));
    let rows = data_rows(&stdout(&run));
    assert_eq!(rows.len(), 4);
    // Rows are (rate, power) lexicographic: r100/q-30, r100/q-20, r300/q-30,
    // r300/q-20. The CCDF falls along both demand axes.
    let f = |i: usize| cell(&rows, i, 2);
    assert!(f(1) <= f(0) + 1e-9);
    assert!(f(3) <= f(2) + 1e-9);
    assert!(f(2) <= f(0) + 1e-9);
    assert!(f(3) <= f(1) + 1e-9);
}

#[test]
fn simulate_replays_per_seed_and_tightens_with_reps() {
    let base = &[
        "simulate",
        "--rates",
        "300",
        "--powers",
        "-20",
        "--seed",
        "11",
    ];
    let a = swipt(&[base as &[&str], &["--reps", "400"]].concat());
    let b = swipt(&[base as &[&str], &["--reps", "400"]].concat());
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(stdout(&a), stdout(&b));
    let wide = cell(&data_rows(&stdout(&a)), 0, 3);
    let c = swipt(&[base as &[&str], &["--reps", "1600"]].concat());
    let tight = cell(&data_rows(&stdout(&c)), 0, 3);
    assert!(tight < wide, "half-widths {wide} -> {tight}");
}

#[test]
fn config_echo_reruns_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("run.csv");
    let run = swipt(&[
        "simulate",
        "--rates",
        "200",
        "--powers",
        "-25",
        "--seed",
        "5",
        "--reps",
        "300",
        "--out",
        first.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", stderr(&run));
    let text = std::fs::read_to_string(&first).unwrap();
    let config: String = text
        .lines()
        .filter_map(|l| l.strip_prefix("# "))
        .filter(|l| l.contains(" = "))
        .map(|l| format!("{l}\n"))
        .collect();
    let cfg_path = dir.path().join("echo.cfg");
    std::fs::write(&cfg_path, config).unwrap();
    let second = dir.path().join("rerun.csv");
    let rerun = swipt(&[
        "simulate",
        "--rates",
        "200",
        "--powers",
        "-25",
        "--config",
        cfg_path.to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]);
    assert!(rerun.status.success(), "{}", stderr(&rerun));
    assert_eq!(
        std::fs::read(&first).unwrap(),
        std::fs::read(&second).unwrap()
    );
}

#[test]
fn tradeoff_empty_sweep_is_header_only() {
    let run = swipt(&["tradeoff", "--sweep", "rho", "--rates", "100"]);
    assert!(run.status.success(), "{}", stderr(&run));
    let text = stdout(&run);
    assert!(data_rows(&text).is_empty());
    assert!(text.lines().any(|l| l.starts_with("# columns: sweep,")));
}

#[test]
fn tradeoff_point_round_trips_through_csv() {
    let run = swipt(&["tradeoff", "--rates", "300", "--level", "0.5"]);
    assert!(run.status.success(), "{}", stderr(&run));
    let rows = data_rows(&stdout(&run));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "none");
    assert_eq!(cell(&rows, 0, 2), 300.0);
    let q_dbm = cell(&rows, 0, 3);
    assert!((-40.0..0.0).contains(&q_dbm), "q = {q_dbm} dBm");
    assert_eq!(cell(&rows, 0, 4), 0.5);
}

#[test]
fn json_output_parses_and_matches_csv_values() {
    let run_csv = swipt(&["chi-table", "--lambda-w", "0.03", "--eta-max", "2"]);
    let run_json = swipt(&[
        "chi-table",
        "--lambda-w",
        "0.03",
        "--eta-max",
        "2",
        "--format",
        "json",
    ]);
    assert!(run_csv.status.success() && run_json.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&run_json)).unwrap();
    assert_eq!(doc["command"], "chi-table");
    assert_eq!(doc["config"]["format"], "json");
    let rows = data_rows(&stdout(&run_csv));
    let json_rows = doc["rows"].as_array().unwrap();
    assert_eq!(json_rows.len(), rows.len());
    for (jr, cr) in json_rows.iter().zip(&rows) {
        assert_eq!(jr["chi"].as_f64().unwrap(), cr[2].parse::<f64>().unwrap());
    }
}

#[test]
fn missing_config_file_is_exit_2() {
    let run = swipt(&["chi-table", "--config", "/nonexistent/run.cfg"]);
    assert_eq!(run.status.code(), Some(2));
    assert!(Path::new("/nonexistent").exists() || !stderr(&run).is_empty());
}
