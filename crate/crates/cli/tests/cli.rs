use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn tfch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tfch")).args(args).output().expect("tfch runs")
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn point(v: &Value) -> Vec<f64> {
    v["final_point"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn linear_path_succeeds_with_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = tfch(&["run", "--problem", "synthetic2", "--tracker", "dcm", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&out);
    assert_eq!(s["outcome"], "success");
    assert!((point(&s)[0] - 1.0).abs() < 1e-12);
    for f in ["trace.jsonl", "trace.csv", "events.jsonl"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let rows = fs::read_to_string(out.join("trace.csv")).unwrap().lines().count() - 1;
    let accepted = fs::read_to_string(out.join("events.jsonl"))
        .unwrap()
        .lines()
        .filter(|l| serde_json::from_str::<Value>(l).unwrap()["event_kind"] == "step_accepted")
        .count();
    assert_eq!(rows, accepted);
    assert_eq!(s["accepted_steps"].as_u64().unwrap() as usize, rows);
}

#[test]
fn pam_diverges_on_example1() {
    let dir = tempfile::tempdir().unwrap();
    let o = tfch(&[
        "run",
        "--problem",
        "example1",
        "--tracker",
        "pam",
        "--homotopy",
        "convex_fixed_point",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(summary(dir.path())["outcome"], "diverged");
}

#[test]
fn example3_tfc_reaches_reference() {
    let dir = tempfile::tempdir().unwrap();
    let o = tfch(&[
        "run",
        "--problem",
        "example3",
        "--tracker",
        "tfc",
        "--homotopy",
        "tfc_poly",
        "--seed",
        "0",
        "--format",
        "csv",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let v = point(&summary(dir.path()));
    let target = [0.0, 0.0, std::f64::consts::PI];
    assert!(v.iter().zip(target).all(|(a, b)| (a - b).abs() <= 1e-4), "{v:?}");
    assert!(!dir.path().join("trace.jsonl").exists());
}

#[test]
fn configuration_errors_exit_5() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for args in [
        vec!["run", "--problem", "nope", "--out", out],
        vec!["run", "--problem", "example1", "--tracker", "newton", "--out", out],
        vec!["run", "--problem", "example1", "--tracker", "tfc", "--homotopy", "convex_newton", "--out", out],
        vec!["run", "--out", out],
        vec!["run", "--problem", "example1", "--dkappa", "-0.1", "--out", out],
        vec!["compare", "--problem", "example1", "--tracker", "dcm", "--out", out],
    ] {
        let o = tfch(&args);
        assert_eq!(o.status.code(), Some(5), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let out = dir.path().join("out");
    fs::write(
        &cfg,
        format!(
            r#"{{"problem":"synthetic2","tracker":"dcm","tracker_params":{{"dkappa_default":0.1}},"output_dir":{:?}}}"#,
            out.to_str().unwrap()
        ),
    )
    .unwrap();
    let o = tfch(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(summary(&out)["accepted_steps"], 11);
    let o = tfch(&["run", "--config", cfg.to_str().unwrap(), "--dkappa", "0.25"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(summary(&out)["accepted_steps"], 5);
}

#[test]
fn reruns_are_identical_apart_from_wall_time() {
    let dir = tempfile::tempdir().unwrap();
    let mut seen = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let o = tfch(&["run", "--problem", "example1", "--seed", "3", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        let mut s = summary(&out);
        s.as_object_mut().unwrap().remove("wall_time_s");
        seen.push(serde_json::to_string(&s).unwrap());
        assert_eq!(s["seed"], 3);
    }
    assert_eq!(seen[0], seen[1]);
}

#[test]
fn compare_on_example1() {
    let dir = tempfile::tempdir().unwrap();
    let o =
        tfch(&["compare", "--problem", "example1", "--tracker", "dcm,pam,tfc", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(dir.path().join("compare.csv")).unwrap();
    let rows: Vec<Vec<&str>> = table.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    let success: Vec<&str> = rows.iter().filter(|r| r[3] == "success").map(|r| r[1]).collect();
    assert_eq!(success, vec!["tfc"]);
}

#[test]
fn debug_logging_goes_to_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_tfch"))
        .args(["run", "--problem", "synthetic2", "--out", dir.path().to_str().unwrap()])
        .env("HOMOTOPY_LOG", "debug")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("tracker config"));
}

#[test]
fn lists_problems() {
    let o = tfch(&["problems"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.lines().any(|l| l == "example3"));
}
