use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bench"))
        .args(args)
        .output()
        .expect("bench binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

const SMALL_SPEC: &str = r#"{
  "feature_counts": [1],
  "instance_counts": [1],
  "envs_per_cell": 3,
  "kernels": [{"variant": "identity"}, {"variant": "velocity", "betas": [2.0, 10.0]}],
  "betas": [5.0],
  "N": 4,
  "base_seed": 21
}"#;

fn write_spec(dir: &Path, text: &str) -> String {
    let path = dir.join("spec.json");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn env_gen_is_deterministic_and_readable() {
    let a = bench(&["env", "gen", "--types", "3", "--instances", "2", "--seed", "9"]);
    let b = bench(&["env", "gen", "--types", "3", "--instances", "2", "--seed", "9"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let doc: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(doc["obstacles"].as_array().unwrap().len(), 6);
    assert_eq!(doc["seed"], 9);

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("env.json");
    let out = bench(&["env", "gen", "--types", "3", "--instances", "2", "--seed", "9", "--out", file.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(fs::read(&file).unwrap(), a.stdout);

    let show = bench(&["env", "show", file.to_str().unwrap()]);
    assert!(show.status.success());
    let text = stdout(&show);
    assert!(text.contains("types       3"));
    assert!(text.contains("optimal objective"));
}

#[test]
fn sweep_writes_outputs_that_cross_check() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), SMALL_SPEC);
    let out_dir = dir.path().join("out");
    let out = bench(&[
        "--jobs",
        "1",
        "sweep",
        "--spec",
        &spec,
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--emit-plot-data",
        "--traces",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in [
        "aggregate.csv",
        "tuning.csv",
        "runs.jsonl",
        "traces.jsonl",
        "failures.csv",
        "spec.json",
        "plot_median_cost.csv",
        "plot_profiles.csv",
    ] {
        assert!(out_dir.join(name).exists(), "missing {name}");
    }
    let aggregate = fs::read_to_string(out_dir.join("aggregate.csv")).unwrap();
    let mut lines = aggregate.lines();
    assert_eq!(lines.next().unwrap(), "num_types,num_instances,kernel,beta,iter_1,iter_2,iter_3,iter_4");
    assert_eq!(lines.count(), 2);
    assert_eq!(fs::read_to_string(out_dir.join("runs.jsonl")).unwrap().lines().count(), 3 + 2 * 3);

    let check = bench(&["check", "--out-dir", out_dir.to_str().unwrap()]);
    assert!(check.status.success());
    assert!(stdout(&check).contains("2 aggregate rows checked, 0 mismatches"));

    // A second run with the seed overridden writes different runs.
    let other = dir.path().join("other");
    let out = bench(&["sweep", "--spec", &spec, "--out-dir", other.to_str().unwrap(), "--seed", "5"]);
    assert!(out.status.success());
    assert_ne!(
        fs::read(out_dir.join("runs.jsonl")).unwrap(),
        fs::read(other.join("runs.jsonl")).unwrap()
    );
    assert!(!other.join("traces.jsonl").exists());
}

#[test]
fn check_reports_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), SMALL_SPEC);
    let out_dir = dir.path().join("out");
    assert!(bench(&["sweep", "--spec", &spec, "--out-dir", out_dir.to_str().unwrap()]).status.success());
    let path = out_dir.join("aggregate.csv");
    let text = fs::read_to_string(&path).unwrap();
    fs::write(&path, text.replacen("identity", "velocity", 1)).unwrap();
    let check = bench(&["check", "--out-dir", out_dir.to_str().unwrap()]);
    assert_eq!(check.status.code(), Some(1));
}

#[test]
fn partial_failures_exit_with_two() {
    // Tiny obstacles rarely bend the optimum away from the straight line, so
    // with a single attempt most seeds fail to generate and a few succeed.
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        dir.path(),
        r#"{
          "feature_counts": [1], "instance_counts": [1], "envs_per_cell": 12,
          "kernels": [{"variant": "velocity"}], "betas": [5.0], "N": 2,
          "generation": {"radius": 0.4, "max_rejections": 1}
        }"#,
    );
    let out_dir = dir.path().join("out");
    let out = bench(&["sweep", "--spec", &spec, "--out-dir", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let failures = fs::read_to_string(out_dir.join("failures.csv")).unwrap();
    assert!(failures.lines().count() > 1);
    assert!(failures.contains("after 1 attempts") || failures.contains("seed"));
    let runs = fs::read_to_string(out_dir.join("runs.jsonl")).unwrap();
    assert!(runs.lines().count() >= 1);
}

#[test]
fn tune_prints_every_rate_and_the_best() {
    let out = bench(&[
        "tune",
        "--kernel",
        "rbf:3",
        "--grid",
        "1,10",
        "--envs",
        "3",
        "--iterations",
        "4",
        "--seed",
        "2",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "beta,final_median");
    assert!(lines[1].starts_with("1,"));
    assert!(lines[2].starts_with("10,"));
    assert!(lines[3] == "best 1" || lines[3] == "best 10");
}

#[test]
fn invalid_input_is_reported() {
    let out = bench(&["tune", "--kernel", "rbf", "--grid", "1"]);
    assert!(!out.status.success());
    let out = bench(&["tune", "--kernel", "velocity", "--grid", "-1", "--envs", "1"]);
    assert!(!out.status.success());
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), r#"{"envs_per_cell": 0}"#);
    let out = bench(&["sweep", "--spec", &spec, "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("envs_per_cell"));
}
