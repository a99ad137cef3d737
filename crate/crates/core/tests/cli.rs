use std::process::{Command, Output};

use qvlc::cli::JsonOutput;

fn qvlc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qvlc")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn dims_prints_both_blocks_of_three_qubits() {
    let o = qvlc(&["dims", "--n", "3", "--d", "2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "lambda,dim_u,dim_v,dim_w,method");
    assert_eq!(rows[1], "\"(3,0)\",4,1,4,exact");
    assert_eq!(rows[2], "\"(2,1)\",2,2,4,exact");
    assert_eq!(rows.len(), 3);
}

#[test]
fn decompose_check_reports_and_exits_zero() {
    let o = qvlc(&["decompose-check", "--n", "4", "--d", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("completeness"));
}

#[test]
fn exit_codes_follow_error_kinds() {
    assert_eq!(qvlc(&["error", "--n", "5"]).status.code(), Some(1));
    assert_eq!(qvlc(&["error", "--n", "5", "--delta", "0.1", "--spectrum", "0.2,0.8"]).status.code(), Some(1));
    assert_eq!(qvlc(&["decompose-check", "--n", "12", "--d", "2"]).status.code(), Some(2));
    let o = qvlc(&["run", "--config", "/nonexistent/config.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nonexistent"));
}

#[test]
fn json_output_replays_through_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.json");
    let o = qvlc(&[
        "lemma-l2", "--spectrum", "0.75,0.25", "--n-grid", "20:60:20", "--format", "json", "--output",
        first.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let bytes = std::fs::read(&first).unwrap();
    let parsed: JsonOutput = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(parsed.results.len(), 3);
    assert_eq!(parsed.seed, 0);

    // the embedded config reruns to the same bytes
    let mut config = parsed.config.clone();
    let second = dir.path().join("second.json");
    config.output = Some(second.clone());
    let config_path = dir.path().join("config.json");
    std::fs::write(&config_path, serde_json::to_string(&config).unwrap()).unwrap();
    assert!(qvlc(&["run", "--config", config_path.to_str().unwrap()]).status.success());
    let rerun: JsonOutput = serde_json::from_slice(&std::fs::read(&second).unwrap()).unwrap();
    assert_eq!(rerun.results, parsed.results);
}

#[test]
fn unwritable_output_fails_without_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("missing/out.csv");
    let o = qvlc(&["dims", "--n", "3", "--d", "2", "--output", target.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!target.exists());
}

#[test]
fn source_files_drive_the_error_command() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("src.json");
    std::fs::write(
        &path,
        r#"{ "d": 2, "atoms": [
            { "weight": 0.5, "matrix": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]] },
            { "weight": 0.5, "matrix": [[[0.5, 0], [0.5, 0]], [[0.5, 0], [0.5, 0]]] } ] }"#,
    )
    .unwrap();
    let o = qvlc(&["error", "--n", "4", "--delta", "0.3", "--source", path.to_str().unwrap(), "--local-error"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 4);
    assert!(text.contains("epsilon_prime"));
}

#[test]
fn sec6_gap_row_is_consistent() {
    let o = qvlc(&["sec6-gap", "--t1", "0.3", "--t0", "0.1", "--delta-theta", "0.2", "--format", "json"]);
    assert!(o.status.success());
    let parsed: JsonOutput = serde_json::from_slice(&o.stdout).unwrap();
    let row = &parsed.results[0];
    let gap = row["gap"].as_f64().unwrap();
    let diff = row["difference"].as_f64().unwrap();
    assert!((gap - diff).abs() < 1e-8);
}
