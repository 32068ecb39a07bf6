use std::path::Path;
use std::process::{Command, Output};

fn courtside(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_courtside"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn synth(root: &Path, subjects: &str) {
    let out = courtside(&[
        "synth",
        "--data",
        root.to_str().unwrap(),
        "--subjects",
        subjects,
        "--days",
        "0,8,4",
        "--hr-interval",
        "600",
        "--seed",
        "5",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn empty_phase_selection_exits_with_usage_error() {
    let out = courtside(&["evaluate", "--phases", ""]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("phase selection is empty"));
}

#[test]
fn unknown_model_exits_with_usage_error() {
    assert_eq!(courtside(&["evaluate", "--model", "perceptron"]).status.code(), Some(1));
}

#[test]
fn missing_data_root_exits_with_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent");
    let out = courtside(&["ingest", "--data", missing.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn label_counts_match_generator_truth() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    synth(&data, "7");
    let truth: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(data.join("truth.json")).unwrap()).unwrap();
    let out = courtside(&[
        "label",
        "--data",
        data.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
        "--min-hr-readings",
        "100",
    ]);
    assert!(out.status.success());
    let counts = &truth["class_counts"];
    let expected = format!("labels: {} good, {} poor", counts[0], counts[1]);
    assert!(String::from_utf8_lossy(&out.stdout).contains(&expected));

    let labels = std::fs::read_to_string(dir.path().join("out/labels.csv")).unwrap();
    for (id, s) in truth["subjects"].as_object().unwrap() {
        let class = s["class"].as_u64().unwrap();
        let row = labels.lines().find(|l| l.contains(&format!(",{id},"))).unwrap();
        assert!(row.ends_with(&format!(",{class}")), "{row}");
    }
}

#[test]
fn evaluate_writes_hashed_summary() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let out_dir = dir.path().join("out");
    synth(&data, "7");
    let out = courtside(&[
        "evaluate",
        "--data",
        data.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--min-hr-readings",
        "100",
        "--model",
        "gnb,rf",
        "--iterations",
        "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(out_dir.join("metrics_summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert!(lines.next().unwrap().starts_with("config_hash,model,phases,iterations,accuracy,f1"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    let cell = rows[0].split(',').nth(4).unwrap();
    let re = cell.len() == "0.0000 (0.000)".len() && cell.contains(" (") && cell.ends_with(')');
    assert!(re, "{cell}");

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    let hash = manifest["config_hash"].as_str().unwrap();
    assert!(rows.iter().all(|r| r.starts_with(hash)));
    assert!(!out_dir.join(".courtside.lock").exists());
}

#[test]
fn locked_output_directory_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join(".courtside.lock"), "").unwrap();
    let out = courtside(&["synth", "--out", dir.path().to_str().unwrap(), "--subjects", "2", "--days", "0,2"]);
    assert_eq!(out.status.code(), Some(1));
}
