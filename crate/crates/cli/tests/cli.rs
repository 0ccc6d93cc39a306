use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_kacstroock");

fn kacstroock(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Runs a subcommand writing into a temporary directory and compares its
/// table with the golden file: identical header and text cells, numbers to
/// 1e-9 relative. `UPDATE_GOLDEN=1` rewrites the golden file.
fn golden(name: &str, table: &str, args: &[&str], expected_code: i32) -> (Vec<String>, Vec<Vec<String>>) {
    let dir = tempfile::tempdir().unwrap();
    let mut full: Vec<&str> = args.to_vec();
    let out_dir = dir.path().to_str().unwrap().to_string();
    full.extend(["--out", &out_dir]);
    let out = kacstroock(&full);
    assert_eq!(code(&out), expected_code, "{name}: {}", stderr(&out));
    let produced = dir.path().join(format!("{table}.csv"));
    let golden = golden_dir().join(format!("{name}.csv"));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::copy(&produced, &golden).unwrap();
    }
    let (h1, r1) = read_csv(&produced);
    let (h2, r2) = read_csv(&golden);
    assert_eq!(h1, h2, "{name}: header");
    assert_eq!(r1.len(), r2.len(), "{name}: row count");
    for (a, b) in r1.iter().flatten().zip(r2.iter().flatten()) {
        match (a.parse::<f64>(), b.parse::<f64>()) {
            (Ok(x), Ok(y)) => assert!(
                x == y || (x - y).abs() <= 1e-9 * x.abs().max(y.abs()),
                "{name}: {a} vs golden {b}"
            ),
            _ => assert_eq!(a, b, "{name}"),
        }
    }
    (h1, r1)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn golden_kernel_check() {
    let (h, rows) = golden("kernel_check_brownian", "kernel_check", &["kernel-check", "--H", "1", "--grid", "0.5,1"], 0);
    for row in &rows {
        assert!(row[column(&h, "abs_error")].parse::<f64>().unwrap() < 1e-12);
    }
    golden("kernel_check_fbm", "kernel_check", &["kernel-check", "--H", "0.75", "--tol", "1e-4"], 0);
}

#[test]
fn golden_simulate() {
    let args = [
        "simulate", "--H", "1", "--grid", "1", "--replicas", "100", "--epsilon", "0.1", "--mode", "single_channel",
        "--seed", "11",
    ];
    let (h, rows) = golden("simulate_brownian", "stats", &args, 0);
    let var = rows.iter().find(|r| r[column(&h, "statistic")] == "cov").unwrap();
    let (est, se): (f64, f64) = (var[column(&h, "estimate")].parse().unwrap(), var[column(&h, "se")].parse().unwrap());
    assert!((est - 1.0).abs() <= 3.0 * se, "{est} ± {se}");
}

#[test]
fn golden_convergence() {
    let args = [
        "convergence", "--H", "1", "--epsilon", "0.4", "--epsilon", "0.2", "--replicas", "400", "--seed", "5",
    ];
    golden("convergence_brownian", "convergence", &args, 0);
}

#[test]
fn golden_independence() {
    let args = [
        "independence", "--H", "0.75", "--epsilon", "0.05", "--theta", "2.0943951023931957", "--replicas", "1000",
        "--seed", "4",
    ];
    let (h, rows) = golden("independence_fbm", "independence", &args, 0);
    assert!(rows.iter().all(|r| r[column(&h, "pass")] == "true"));
}

#[test]
fn golden_decompose() {
    let args = [
        "decompose", "--H", "0.6", "--epsilon", "0.3", "--replicas", "200", "--tail-tol", "1", "--tol", "0.5",
        "--seed", "6",
    ];
    golden("decompose_subfbm", "decompose", &args, 0);
}

#[test]
fn zero_kernel_gives_all_zero_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("zero.json");
    std::fs::write(
        &cfg,
        r#"{"kernel": {"kind": "tabulated", "knots": [0, 1], "values": [0, 0]}, "epsilon": [0.2], "replicas": 100}"#,
    )
    .unwrap();
    let out = kacstroock(&["simulate", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let (h, rows) = read_csv(&dir.path().join("stats.csv"));
    let (e, s) = (column(&h, "estimate"), column(&h, "se"));
    assert!(!rows.is_empty());
    for row in rows {
        assert_eq!(row[e].parse::<f64>().unwrap(), 0.0);
        assert!(row[s].is_empty() || row[s].parse::<f64>().unwrap() == 0.0);
    }
}

#[test]
fn exit_codes() {
    let out = kacstroock(&["kernel-check", "--H", "1", "--model", "lei-nualart"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("unsupported-parameter"));

    let out = kacstroock(&["simulate", "--H", "0.75", "--epsilon", "1e-6"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("horizon-guard"));

    let out = kacstroock(&["decompose", "--H", "1.3", "--epsilon", "0.1"]);
    assert_eq!(code(&out), 1);

    let out = kacstroock(&["convergence", "--H", "1", "--epsilon", "0.1", "--epsilon", "0.2"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("decreasing"));

    // a tolerance no run can meet
    let out = kacstroock(&["kernel-check", "--H", "0.75", "--grid", "1", "--tol", "0", "--quad-tol", "1e-6"]);
    assert_eq!(code(&out), 2);

    assert_eq!(code(&kacstroock(&["simulate", "--replicas", "x"])), 1);
    assert_eq!(code(&kacstroock(&["simulate", "--H", "0.5", "--theta", "3.141592653589793", "--epsilon", "0.1"])), 1);
    assert_eq!(code(&kacstroock(&["simulate", "--H", "0.5"])), 1);
    assert_eq!(code(&kacstroock(&["simulate", "--H", "0.5", "--epsilon", "0.2", "--replicas", "10"])), 1);
}

#[test]
fn bad_config_files_are_invalid() {
    let dir = tempfile::tempdir().unwrap();
    for (name, body) in [
        ("unknown.json", r#"{"hurst": 0.5, "no_such_key": 1}"#),
        ("version.json", r#"{"schema_version": 2, "hurst": 0.5}"#),
        ("syntax.json", r#"{"hurst": "#),
    ] {
        let path = dir.path().join(name);
        std::fs::write(&path, body).unwrap();
        let out = kacstroock(&["kernel-check", "--config", path.to_str().unwrap()]);
        assert_eq!(code(&out), 1, "{name}");
    }
    let out = kacstroock(&["kernel-check", "--config", "/nonexistent/config.json"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn flags_override_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"hurst": 0.75, "grid": [0.5, 1.0], "model": "fbm", "seed": 3}"#).unwrap();
    let out_dir = dir.path().join("out");
    let out = kacstroock(&[
        "kernel-check", "--config", cfg.to_str().unwrap(), "--H", "1", "--out", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let summary: Value = serde_json::from_slice(&std::fs::read(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["hurst"], 1.0);
    assert_eq!(summary["config"]["grid"], serde_json::json!([0.5, 1.0]));
    assert_eq!(summary["master_seed"], 3);
}

#[test]
fn summary_round_trip_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    let out = kacstroock(&[
        "simulate", "--H", "0.75", "--epsilon", "0.1", "--replicas", "150", "--seed", "auto", "--threads", "2",
        "--out", first.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let summary: Value = serde_json::from_slice(&std::fs::read(first.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema_version"], 1);
    let seed = summary["master_seed"].as_u64().unwrap();
    assert_eq!(summary["config"]["seed"].as_u64(), Some(seed));
    assert!(stderr(&out).contains(&format!("master_seed: {seed}")));

    let out = kacstroock(&[
        "simulate", "--config", first.join("summary.json").to_str().unwrap(), "--threads", "1", "--out",
        second.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(std::fs::read(first.join("stats.csv")).unwrap(), std::fs::read(second.join("stats.csv")).unwrap());
}

#[test]
fn csv_numbers_round_trip_exactly() {
    let out = kacstroock(&["kernel-check", "--H", "0.3", "--grid", "0.7", "--format", "json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let json: Value = serde_json::from_slice(&out.stdout).unwrap();
    let oracle = json[0]["oracle"].as_f64().unwrap();

    let out = kacstroock(&["kernel-check", "--H", "0.3", "--grid", "0.7"]);
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    let row = r.records().next().unwrap().unwrap();
    assert_eq!(row[2].parse::<f64>().unwrap(), oracle);
    assert_eq!(row[2].split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
}

#[test]
fn json_rows_keep_column_order() {
    let out = kacstroock(&["kernel-check", "--H", "1", "--grid", "1", "--format", "json"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let positions: Vec<usize> = ["\"t\"", "\"s\"", "\"oracle\"", "\"closed_form\"", "\"pass\""]
        .iter()
        .map(|k| text.find(k).unwrap())
        .collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]), "{text}");
}
