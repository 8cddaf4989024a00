use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn freiman(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_freiman"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL: &str = r#"{"N_list": [31, 37], "p_spec": {"alpha": [0.4, 0.7]}, "trials": 30, "master_seed": 9}"#;

#[test]
fn rank_of_literal_sets() {
    let o = freiman(&["rank", "{0,1,3}", "--modulus", "7"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["rank"], 2);
    assert_eq!(v["linear"], false);

    let sidon = freiman(&["rank", "1,2,4,8,16,32", "-n", "101"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&sidon)).unwrap();
    assert_eq!(v["rank"], 5);
}

#[test]
fn rank_from_json_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("set.json");
    fs::write(&path, r#"{"N": 11, "members": [0, 2, 4, 6]}"#).unwrap();
    let o = freiman(&["rank", path.to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["rank"], 1);
    assert_eq!(v["N"], 11);
}

#[test]
fn deterministic_sweep_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    for name in ["a.csv", "b.csv"] {
        let o = freiman(&["sweep", "--config", &cfg, "--deterministic", "--out", &out(name)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = fs::read(out("a.csv")).unwrap();
    assert_eq!(a, fs::read(out("b.csv")).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("N,alpha,p,trials,"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn timestamp_only_without_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = freiman(&["lowerbound", "--config", &cfg, "--trials", "5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("# generated_at_unix="));
    assert!(text.lines().nth(1).unwrap().starts_with("N,alpha,p,trials,empty_sets"));
}

#[test]
fn jsonl_has_one_line_per_trial() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let jsonl = dir.path().join("trials.jsonl");
    let o = freiman(&[
        "lambda",
        "--config",
        &cfg,
        "--levels",
        "1",
        "--trials",
        "4",
        "--deterministic",
        "--jsonl",
        jsonl.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let lines = fs::read_to_string(&jsonl).unwrap();
    assert_eq!(lines.lines().count(), 16);
    let first: serde_json::Value = serde_json::from_str(lines.lines().next().unwrap()).unwrap();
    assert_eq!(first["lambda_levels"].as_array().unwrap().len(), 2);
    // two level rows per cell
    assert_eq!(stdout(&o).lines().count(), 9);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(
        dir.path(),
        r#"{"N_list": [100], "p_spec": {"alpha": [0.4]}, "trials": 3, "master_seed": 1}"#,
    );
    assert_eq!(freiman(&["sweep", "--config", &bad]).status.code(), Some(2));
    let missing = dir.path().join("nope.json");
    assert_eq!(
        freiman(&["sweep", "--config", missing.to_str().unwrap()]).status.code(),
        Some(2)
    );
    assert_eq!(freiman(&["sweep", "--levels", "9"]).status.code(), Some(3));
    let big = write_config(
        dir.path(),
        r#"{"N_list": [19], "p_spec": {"explicit": [0.5]}, "trials": 1, "master_seed": 1}"#,
    );
    assert_eq!(freiman(&["distreport", "--config", &big]).status.code(), Some(3));
    assert_eq!(freiman(&["rank", "0,1,2"]).status.code(), Some(2));
    assert_eq!(freiman(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn lambda_table_dump() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("t.flt");
    let o = freiman(&[
        "lambda",
        "--set",
        "0,1,2,3",
        "-n",
        "7",
        "--levels",
        "1",
        "--exact",
        "--dump",
        dump.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let bytes = fs::read(&dump).unwrap();
    assert_eq!(&bytes[..4], b"FLT1");
    assert_eq!(&bytes[4..16], &[7, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0]);
    let csv = stdout(&o);
    assert_eq!(csv.lines().count(), 50);
}

#[test]
fn vu_schedule_check() {
    let ok = freiman(&[
        "vu", "--triangle", "100", "--p", "0.0464", "--schedule", "10000,100,1", "--lambda", "10",
    ]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(stdout(&ok).contains("deviation,,3162.277660"));
    let bad = freiman(&["vu", "--triangle", "10", "--p", "0.5", "--schedule", "1,0.5", "--lambda", "1"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("j = 0"));
}

#[test]
fn distreport_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"N_list": [11, 13], "p_spec": {"explicit": [0.5]}, "trials": 1, "master_seed": 1}"#,
    );
    let o = freiman(&["distreport", "--config", &cfg, "--deterministic"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("N,p,metric,j,value\n"));
    assert!(text.contains("11,,terms,,264.000000"));
    // terms, 2 degenerate rows, 5 buckets, 10 dist2 ratios per N
    assert_eq!(text.lines().count(), 1 + 2 * 18);
}
