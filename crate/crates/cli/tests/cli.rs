use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bscale-recog"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn echo(args: &[&str]) -> serde_json::Value {
    let mut all = args.to_vec();
    all.extend(["config", "echo"]);
    let out = run(&all);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&["eval", "sweep", "--help"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["config", "echo", "--ts", "1.5"]).status.code(), Some(2));
    assert_eq!(run(&["config", "echo", "--kmax", "0"]).status.code(), Some(2));
    assert_eq!(run(&["bscale", "--input", "x.mhd"]).status.code(), Some(2));
}

#[test]
fn missing_input_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "bscale",
        "--input",
        p(&dir.path().join("missing.mhd")),
        "--out-r",
        p(&dir.path().join("r.mhd")),
        "--out-wbs",
        p(&dir.path().join("w.mhd")),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"ts": 0.9, "kmax": 12}"#).unwrap();
    let from_file = echo(&["--config", p(&cfg)]);
    assert_eq!(from_file["ts"], serde_json::json!(0.9));
    assert_eq!(from_file["kmax"], serde_json::json!(12));

    let out = run(&["--config", p(&cfg), "config", "echo", "--ts", "0.8"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["ts"], serde_json::json!(0.8));
    assert_eq!(v["kmax"], serde_json::json!(12));

    let defaults = echo(&[]);
    assert_eq!(defaults["ts"], serde_json::json!(0.85));
    assert_eq!(defaults["kmax"], serde_json::json!(26));
}

#[test]
fn bad_config_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"ts": 2.0}"#).unwrap();
    assert_eq!(run(&["--config", p(&cfg), "config", "echo"]).status.code(), Some(2));
    std::fs::write(&cfg, "{ not json").unwrap();
    assert_eq!(run(&["--config", p(&cfg), "config", "echo"]).status.code(), Some(2));
}

#[test]
fn pipeline_from_phantom_to_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let ok = |args: &[&str]| {
        let out = run(args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    };
    ok(&["phantom", "gen", "--n", "3", "--out", p(&data)]);
    assert!(data.join("dataset.json").exists());
    assert!(data.join("subject_000").join("liver.mhd").exists());

    let model = dir.path().join("model.json");
    ok(&["model", "build", "--data", p(&data), "--objects", "skin,liver", "--out", p(&model)]);

    let result = dir.path().join("rec.json");
    let scene = data.join("subject_002").join("scene.mhd");
    ok(&["recognize", "--input", p(&scene), "--model", p(&model), "--out", p(&result), "--refine-skin"]);
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&result).unwrap()).unwrap();
    assert!(doc["pose"]["s"].as_f64().unwrap() > 0.0);
    assert_eq!(doc["placed"].as_object().unwrap().len(), 2);
    assert!(doc["refined"]["containment"].as_f64().unwrap() > 0.5);

    let wbs = dir.path().join("wbs.mhd");
    let mask = dir.path().join("mask.mhd");
    ok(&["bscale", "--input", p(&scene), "--out-r", p(&dir.path().join("r.mhd")), "--out-wbs", p(&wbs)]);
    ok(&["wbs-threshold", "--input", p(&wbs), "--out", p(&mask)]);

    let csv = dir.path().join("loocv.csv");
    ok(&["eval", "loocv", "--data", p(&data), "--objects", "liver", "--out", p(&csv)]);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("# config: {"));
    assert_eq!(text.lines().filter(|l| l.starts_with("subject_")).count(), 3);

    let unknown = run(&["eval", "loocv", "--data", p(&data), "--objects", "pancreas", "--out", p(&csv)]);
    assert_eq!(unknown.status.code(), Some(2));
}
