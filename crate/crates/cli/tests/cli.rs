use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_incomplete-infer"));
    cmd.env_remove("INCOMPLETE_INFER_SEED");
    cmd
}

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, contents).unwrap();
    path
}

/// `ones` ones followed by `n − ones` zeros, one per row.
fn binary_csv(dir: &Path, n: usize, ones: usize) -> PathBuf {
    let rows: String = (0..n).map(|i| if i < ones { "1\n" } else { "0\n" }).collect();
    write(dir, "d.csv", &rows)
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn entry_game_test(data: &Path) -> Command {
    let mut cmd = bin();
    cmd.args([
        "test",
        "--model",
        "entry-game",
        "--lambda",
        "0.5",
        "--phi",
        "1",
        "--alpha",
        "0.95",
        "--quantile",
        "bridge",
    ])
    .arg("--data")
    .arg(data);
    cmd
}

#[test]
fn test_command_reports_and_embeds_config() {
    let dir = TempDir::new().unwrap();
    let data = binary_csv(dir.path(), 200, 80);
    let out = json(&run(entry_game_test(&data).args(["--seed", "7"])));
    let report = &out["report"];
    assert_eq!(report["reject"], Value::Bool(false));
    assert_eq!(report["statistic"]["raw"].as_f64(), Some(0.0));
    let config = &out["config"];
    assert_eq!(config["command"], "test");
    assert_eq!(config["options"]["seed"], 7);
    assert_eq!(config["options"]["family"], "powerset");
    assert_eq!(config["options"]["reps"], 1000);
    assert_eq!(config["options"]["alpha"].as_f64(), Some(0.95));
}

#[test]
fn test_command_rejects_an_incompatible_sample() {
    let dir = TempDir::new().unwrap();
    let data = binary_csv(dir.path(), 1000, 700);
    let out = json(&run(&mut entry_game_test(&data)));
    assert_eq!(out["report"]["reject"], Value::Bool(true));
    assert!((out["report"]["statistic"]["raw"].as_f64().unwrap() - 0.2).abs() <= 1e-12);
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = TempDir::new().unwrap();
    let data = binary_csv(dir.path(), 500, 255);
    let first = run(entry_game_test(&data).args(["--seed", "3"]));
    let second = run(entry_game_test(&data).args(["--seed", "3"]));
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    let threaded = run(entry_game_test(&data).args(["--seed", "3", "--threads", "1"]));
    assert_eq!(json(&threaded)["report"], json(&first)["report"]);
}

#[test]
fn seed_falls_back_to_the_environment() {
    let dir = TempDir::new().unwrap();
    let data = binary_csv(dir.path(), 100, 50);
    let out = json(&run(entry_game_test(&data).env("INCOMPLETE_INFER_SEED", "42")));
    assert_eq!(out["config"]["options"]["seed"], 42);
    let out = json(&run(&mut entry_game_test(&data)));
    assert_eq!(out["config"]["options"]["seed"], 0);
}

#[test]
fn output_flag_writes_the_report_file() {
    let dir = TempDir::new().unwrap();
    let data = binary_csv(dir.path(), 100, 50);
    let target = dir.path().join("report.json");
    let out = run(entry_game_test(&data).arg("--output").arg(&target));
    assert!(out.status.success());
    let written: Value = serde_json::from_str(&fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(written["config"]["command"], "test");
}

#[test]
fn oracle_reports_violation_and_witness() {
    let dir = TempDir::new().unwrap();
    let model =
        write(dir.path(), "m.json", r#"{"y": ["y1", "y2"], "u": ["u1", "u2"], "edges": [[0, 0], [1, 0], [1, 1]]}"#);
    let out = json(&run(bin()
        .args(["oracle", "--nu", "0.3,0.7", "--p", "0.5,0.5", "--model"])
        .arg(format!("finite:{}", model.display()))));
    let report = &out["report"];
    assert_eq!(report["feasible"], Value::Bool(false));
    assert!((report["coupling"]["violation_mass"].as_f64().unwrap() - 0.2).abs() <= 1e-12);
    assert!((report["dual"]["value"].as_f64().unwrap() - 0.2).abs() <= 1e-12);

    let ok = json(&run(bin()
        .args(["oracle", "--nu", "0.6,0.4", "--p", "0.5,0.5", "--model"])
        .arg(format!("finite:{}", model.display()))));
    assert_eq!(ok["report"]["feasible"], Value::Bool(true));
}

#[test]
fn oracle_accepts_a_data_file_of_labels() {
    let dir = TempDir::new().unwrap();
    let model =
        write(dir.path(), "m.json", r#"{"y": ["y1", "y2"], "u": ["u1", "u2"], "edges": [[0, 0], [1, 0], [1, 1]]}"#);
    let data = write(dir.path(), "y.csv", "y1\ny2\n1\ny1\n");
    let out = json(&run(bin()
        .args(["oracle", "--nu", "0.3,0.7", "--model"])
        .arg(format!("finite:{}", model.display()))
        .arg("--data")
        .arg(&data)));
    // P = (1/2, 1/2) again
    assert!((out["report"]["coupling"]["violation_mass"].as_f64().unwrap() - 0.2).abs() <= 1e-12);
}

#[test]
fn region_reports_accepted_points() {
    let dir = TempDir::new().unwrap();
    let data = binary_csv(dir.path(), 1000, 300);
    let out = json(&run(bin()
        .args(["region", "--model", "entry-game", "--grid", "lambda=0.05:1:0.05,phi=0.25:4:0.25", "--reps", "200"])
        .arg("--data")
        .arg(&data)));
    let report = &out["report"];
    assert_eq!(report["points"].as_array().unwrap().len(), 320);
    let accepted = report["accepted"].as_array().unwrap();
    assert!(!accepted.is_empty() && accepted.len() < 320);
    // λ = 1 is compatible with any p_n
    for (i, point) in report["points"].as_array().unwrap().iter().enumerate() {
        if (point["theta"]["lambda"].as_f64().unwrap() - 1.0).abs() < 1e-12 {
            assert!(accepted.iter().any(|a| a.as_u64() == Some(i as u64)));
        }
    }
}

#[test]
fn bounds_on_two_brackets() {
    let dir = TempDir::new().unwrap();
    let data = write(dir.path(), "c.csv", "10\n20\n");
    let out = json(&run(bin().args(["bounds", "--delta", "2"]).arg("--data").arg(&data)));
    assert_eq!(out["report"]["lower"].as_f64(), Some(14.0));
    assert_eq!(out["report"]["upper"].as_f64(), Some(16.0));
    assert_eq!(out["config"]["alpha"].as_f64(), Some(0.95));
}

#[test]
fn data_errors_exit_with_three() {
    let dir = TempDir::new().unwrap();
    let bad = write(dir.path(), "bad.csv", "0\nabc\n1\n");
    let out = run(&mut entry_game_test(&bad));
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 2"));

    let empty = write(dir.path(), "empty.csv", "");
    let out = run(&mut entry_game_test(&empty));
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty sample"));

    let not_binary = write(dir.path(), "two.csv", "0\n2\n");
    assert_eq!(run(&mut entry_game_test(&not_binary)).status.code(), Some(3));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let data = binary_csv(dir.path(), 10, 5);
    let out =
        run(bin().args(["test", "--model", "entry-game", "--lambda", "1.5", "--phi", "1"]).arg("--data").arg(&data));
    assert_eq!(out.status.code(), Some(2));
    let out = run(entry_game_test(&data).args(["--alpha", "1.5"]));
    assert_eq!(out.status.code(), Some(2));
    let out = run(entry_game_test(&data).args(["--family", "ellipses"]));
    assert_eq!(out.status.code(), Some(2));
    let out = run(bin().args(["test", "--model", "nowhere", "--lambda", "0.5"]).arg("--data").arg(&data));
    assert_eq!(out.status.code(), Some(2));
}
