use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use vnf_autoscale::config::RunConfig;

fn vnfscale(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vnfscale"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = vnfscale(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Small, fast run: 12 days, 10 train / 2 test, 20 trees.
const SMALL: &str = r#"
seed = 11
[trace]
days = 12
[split]
train_days = 10
test_days = 2
[params.forest]
n_trees = 20
[curve]
feature_counts = [7, 15]
day_counts = [2, 10]
"#;

fn small_setup() -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    ok(dir.path(), &["--config", "small.toml", "generate", "-o", "trace.csv"]);
    (dir, cfg)
}

#[test]
fn generate_writes_expected_rows() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(dir.path(), &["generate", "--days", "42", "--seed", "7", "-o", "trace.csv"]);
    assert!(stdout.contains("12096 samples"));
    let text = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("timestamp,load_bits"));
    assert_eq!(lines.count(), 12096);
}

#[test]
fn generate_without_output_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = vnfscale(dir.path(), &["generate", "--days", "3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn zero_days_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = vnfscale(dir.path(), &["generate", "--days", "0", "-o", "t.csv"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("days"));
    assert!(!dir.path().join("t.csv").exists());
}

#[test]
fn shipped_config_matches_defaults() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config/default.toml");
    let text = fs::read_to_string(path).unwrap();
    let parsed: RunConfig = toml::from_str(&text).unwrap();
    assert_eq!(parsed, RunConfig::default());
}

#[test]
fn evaluate_without_models_names_the_missing_step() {
    let (dir, _) = small_setup();
    let out = vnfscale(
        dir.path(),
        &["--config", "small.toml", "--out-dir", "empty", "evaluate", "--trace", "trace.csv"],
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("train"));
}

#[test]
fn train_then_evaluate_is_reproducible() {
    let (dir, _) = small_setup();
    let d = dir.path();
    let base = ["--config", "small.toml", "--out-dir", "o"];
    let train = [
        &base[..],
        &["train", "--trace", "trace.csv", "--algo", "random-forest", "--label", "cml", "--train-days", "10"],
    ]
    .concat();
    ok(d, &train);
    let eval = [&base[..], &["evaluate", "--trace", "trace.csv", "--test-days", "2"]].concat();
    let first_stdout = ok(d, &eval);
    assert!(first_stdout.contains("random-forest"));
    let first = fs::read(d.join("o/evaluation.json")).unwrap();
    let first_csv = fs::read(d.join("o/evaluation.csv")).unwrap();
    ok(d, &eval);
    assert_eq!(first, fs::read(d.join("o/evaluation.json")).unwrap());
    assert_eq!(first_csv, fs::read(d.join("o/evaluation.csv")).unwrap());

    let json: serde_json::Value = serde_json::from_slice(&first).unwrap();
    let precision = json["result"][0]["report"]["aggregate"]["precision"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&precision));
    assert!(json["config_hash"].as_str().unwrap().len() == 64);
    let csv = String::from_utf8(first_csv).unwrap();
    assert!(csv.starts_with("# config_hash="));
}

#[test]
fn docker_degrades_no_more_than_xen() {
    let (dir, _) = small_setup();
    let d = dir.path();
    let base = ["--config", "small.toml", "--out-dir", "o"];
    for label in ["qml", "cml"] {
        ok(d, &[&base[..], &["train", "--trace", "trace.csv", "--label", label]].concat());
    }
    let mut degraded = Vec::new();
    for profile in ["docker", "xen"] {
        ok(
            d,
            &[&base[..], &["simulate", "--trace", "trace.csv", "--profile", profile]].concat(),
        );
        let json: serde_json::Value = serde_json::from_slice(&fs::read(d.join("o/simulation.json")).unwrap()).unwrap();
        let per_method: Vec<(String, f64)> = json["result"]
            .as_array()
            .unwrap()
            .iter()
            .map(|e| {
                (
                    e["method"].as_str().unwrap().to_string(),
                    e["report"]["degraded_minutes_total"].as_f64().unwrap(),
                )
            })
            .collect();
        degraded.push(per_method);
    }
    assert_eq!(degraded[0].len(), 3);
    for ((m, docker), (m2, xen)) in degraded[0].iter().zip(&degraded[1]) {
        assert_eq!(m, m2);
        assert!(docker <= xen, "{m}: docker {docker} > xen {xen}");
    }
}

#[test]
fn cost_rejects_wrong_trace_count() {
    let (dir, _) = small_setup();
    let d = dir.path();
    let base = ["--config", "small.toml", "--out-dir", "o"];
    for label in ["qml", "cml"] {
        ok(d, &[&base[..], &["train", "--trace", "trace.csv", "--label", label]].concat());
    }
    let out = vnfscale(
        d,
        &[&base[..], &["cost", "--trace", "trace.csv", "--trace", "trace.csv"]].concat(),
    );
    assert!(!out.status.success());
    let stdout = ok(d, &[&base[..], &["cost", "--trace", "trace.csv"]].concat());
    assert!(stdout.contains("qml") && stdout.contains("ma"));
    let csv = fs::read_to_string(d.join("o/cost.csv")).unwrap();
    assert_eq!(
        csv.lines().nth(1),
        Some("method,site,service,vnf_cost,network_cost,degradation_cost,total")
    );
    // 3 methods x 4 sites x 3 services.
    assert_eq!(csv.lines().count(), 2 + 36);
}

#[test]
fn report_is_byte_identical_across_runs() {
    let (dir, _) = small_setup();
    let d = dir.path();
    for out in ["a", "b"] {
        ok(d, &["--config", "small.toml", "--out-dir", out, "report"]);
    }
    let mut names: Vec<_> = fs::read_dir(d.join("a"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() >= 20, "{names:?}");
    for name in names {
        let a = fs::read(d.join("a").join(&name)).unwrap();
        let b = fs::read(d.join("b").join(&name)).unwrap();
        assert!(a == b, "{name:?} differs");
    }
    assert!(!d.join("a/timing.json").exists());
}
