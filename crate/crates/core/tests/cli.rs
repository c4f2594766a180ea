//! End-to-end checks of the `rltopa` binary: exit codes and artefacts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(format!("{name}.json"))
}

fn shipped_json(name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(shipped(name)).unwrap()).unwrap()
}

/// Scenario A shrunk to a coarse lattice and two very short episodes.
fn tiny_scenario() -> Value {
    let mut v = shipped_json("scenario_a_homogeneous");
    v["grid_size"] = json!(5.0);
    v["episode"] = json!({"duration_s": 3.0, "decision_interval_s": 0.1, "warmup_s": 0.2});
    v["train"] = json!({"episodes": 2, "batch_size": 8});
    v
}

fn write(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(v).unwrap()).unwrap();
    path
}

fn rltopa(args: &[&str], scenario: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rltopa"))
        .args(args)
        .arg("--scenario")
        .arg(scenario)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

#[test]
fn validate_accepts_every_shipped_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    for name in [
        "scenario_a_homogeneous",
        "scenario_a_heterogeneous_1",
        "scenario_a_heterogeneous_2",
        "scenario_b_homogeneous",
        "scenario_b_heterogeneous_1",
        "scenario_b_heterogeneous_2",
    ] {
        let out = rltopa(&["validate"], &shipped(name), tmp.path());
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn inverted_building_exits_with_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let mut v = shipped_json("scenario_a_homogeneous");
    v["venue"]["buildings"][3] = json!([10.0, -10.0, 40.0, 45.0, 0.0, 10.0, 1, 1, 1]);
    let path = write(tmp.path(), "bad.json", &v);
    let out = rltopa(&["validate"], &path, &tmp.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("buildings[3]"), "{stderr}");
}

#[test]
fn missing_file_exits_with_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = rltopa(&["validate"], &tmp.path().join("absent.json"), tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unreachable_demand_exits_infeasible() {
    let tmp = tempfile::tempdir().unwrap();
    let mut v = tiny_scenario();
    v["radio"]["p_t_dbm"] = json!(-30.0);
    let path = write(tmp.path(), "weak.json", &v);
    for mode in ["feasibility", "report"] {
        let out = rltopa(&[mode], &path, &tmp.path().join(mode));
        assert_eq!(out.status.code(), Some(3), "{mode}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn oracle_without_buildings_sees_every_user() {
    let tmp = tempfile::tempdir().unwrap();
    let mut v = tiny_scenario();
    v["venue"]["buildings"] = json!([]);
    let path = write(tmp.path(), "open.json", &v);
    let out_dir = tmp.path().join("out");
    let out = rltopa(&["oracle"], &path, &out_dir);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let oracle: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("oracle.json")).unwrap()).unwrap();
    assert_eq!(oracle["max_nlos"], json!(4));
    assert_eq!(oracle["users"], json!(4));
}

#[test]
fn thirty_seeds_give_thirty_rows_per_position() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write(tmp.path(), "tiny.json", &tiny_scenario());
    let out_dir = tmp.path().join("out");
    let out = rltopa(&["report", "--seeds", "1..30"], &path, &out_dir);
    assert!(matches!(out.status.code(), Some(0 | 1)), "{}", String::from_utf8_lossy(&out.stderr));

    let metrics = std::fs::read_to_string(out_dir.join("metrics.csv")).unwrap();
    let mut lines = metrics.lines();
    assert!(lines.next().unwrap().starts_with("seed,position,"));
    let mut per_position = std::collections::BTreeMap::<String, usize>::new();
    for line in lines {
        *per_position.entry(line.split(',').nth(1).unwrap().to_string()).or_default() += 1;
    }
    assert!(per_position.contains_key("chosen") && per_position.contains_key("baseline"));
    assert!(per_position.values().all(|n| *n == 30), "{per_position:?}");
    for seed in [1, 15, 30] {
        assert!(out_dir.join(format!("policy_seed{seed}.rltq")).exists());
        assert!(out_dir.join(format!("reward_cdf_seed{seed}.csv")).exists());
    }
    for file in ["certificate.json", "summary.txt", "throughput_ccdf.csv", "delay_cdf.csv", "metadata.json"] {
        assert!(out_dir.join(file).exists(), "{file}");
    }
}

#[test]
fn eval_reloads_trained_policies() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write(tmp.path(), "tiny.json", &tiny_scenario());
    let out_dir = tmp.path().join("out");
    let train = rltopa(&["train", "--seeds", "3,4"], &path, &out_dir);
    assert_eq!(train.status.code(), Some(0), "{}", String::from_utf8_lossy(&train.stderr));
    let eval = rltopa(&["eval", "--seeds", "3,4", "--trace"], &path, &out_dir);
    assert!(matches!(eval.status.code(), Some(0 | 1)), "{}", String::from_utf8_lossy(&eval.stderr));
    let rows: Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("eval_certificate.json")).unwrap()).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 2);
    assert!(out_dir.join("eval_trace_seed4.csv").exists());

    let missing = rltopa(&["eval", "--seeds", "9"], &path, &out_dir);
    assert_eq!(missing.status.code(), Some(2));
}
