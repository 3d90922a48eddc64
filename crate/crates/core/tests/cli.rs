use std::process::{Command, Output};

fn contropt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_contropt")).args(args).output().expect("binary runs")
}

const FAST: &str = "contractions = 3\nhyper_starts = 4\n";

fn fast_config(dir: &tempfile::TempDir) -> String {
    let path = dir.path().join("fast.toml");
    std::fs::write(&path, FAST).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn list_prints_registry() {
    let out = contropt(&["list"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["branin", "sin2", "ackley", "rosenbrock", "lj"] {
        assert!(text.contains(name));
    }
}

#[test]
fn unknown_problem_is_a_usage_error() {
    let out = contropt(&["run", "--problem", "nosuch"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nosuch"));
    assert!(out.stdout.is_empty());
}

#[test]
fn bad_flags_and_configs_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(contropt(&["run", "--problem", "branin", "--bogus"]).status.code(), Some(1));
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "contractions = 0\n").unwrap();
    assert_eq!(contropt(&["run", "--problem", "branin", "--config", bad.to_str().unwrap()]).status.code(), Some(1));
    std::fs::write(&bad, "no_such_key = 3\n").unwrap();
    assert_eq!(contropt(&["run", "--problem", "branin", "--config", bad.to_str().unwrap()]).status.code(), Some(1));
    let out = Command::new(env!("CARGO_BIN_EXE_contropt")).args(["list"]).env("CONTROPT_THREADS", "zero").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unwritable_output_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fast_config(&dir);
    let out = contropt(&["run", "--problem", "branin", "--config", &cfg, "--out", "/nonexistent/dir/out.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn json_runs_repeat_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fast_config(&dir);
    let args = ["run", "--problem", "branin", "--seed", "7", "--format", "json", "--config", &cfg];
    let a = contropt(&args);
    let b = contropt(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["config", "records", "termination", "trace"]);
    assert_eq!(v["config"]["seed"], 7);
}

#[test]
fn csv_to_file_has_fixed_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fast_config(&dir);
    let out_path = dir.path().join("trace.csv");
    let out = contropt(&["run", "--problem", "sin2", "--config", &cfg, "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(out_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("eval_index,f_best,gap,level,model_size"));
    let rows: Vec<Vec<f64>> =
        lines.map(|l| l.split(',').map(|c| c.parse::<f64>().unwrap()).collect()).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.len() == 5 && r[2] >= -1e-9));
    assert!(rows.windows(2).all(|w| w[1][1] <= w[0][1]));
}

#[test]
fn bench_with_baselines_emits_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fast_config(&dir);
    let out = Command::new(env!("CARGO_BIN_EXE_contropt"))
        .args(["bench", "--problem", "branin", "--repeats", "2", "--baselines", "--format", "json", "--config", &cfg])
        .env("CONTROPT_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["config", "records", "termination", "trace"]);
    assert_eq!(v["config"]["problem"], "branin");
    assert_eq!(v["trace"]["baselines"].as_array().unwrap().len(), 2);
    assert_eq!(v["records"].as_array().unwrap().len(), 2);
}

#[test]
fn documented_example_config_is_the_default() {
    let text = include_str!("../../../docs/config.example.toml");
    let cfg = contropt::contraction::RunConfig::from_toml(text).unwrap();
    assert_eq!(cfg, contropt::contraction::RunConfig::default());
    let ramp = contropt::contraction::RunConfig::from_toml("confidence = { ramp = 3.5 }\n").unwrap();
    assert_eq!(ramp.confidence.at(5, 10), 1.75);
}
