//! The `eva` binary: exit codes, report files and diagnostics.

use std::fs;
use std::process::{Command, Output};

fn eva(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eva"))
        .args(args)
        .output()
        .expect("spawn eva")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn demo_writes_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("demo.json");
    let out = eva(&[
        "demo",
        "--protocol",
        "s3phm",
        "--n",
        "6",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(report["accepted"], true);
    assert_eq!(report["stats"]["messages"], 42);
    assert!(report["relative_error"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn demo_over_tcp() {
    let out = eva(&["demo", "--protocol", "s2pi", "--n", "5", "--transport", "tcp"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("[PASS] rounds"));
}

#[test]
fn singular_inversion_exits_with_diagnostic() {
    let out = eva(&["demo", "--protocol", "s2pi", "--n", "4", "--singular"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("singular"), "{}", stderr(&out));
}

#[test]
fn failed_check_exits_one() {
    // Zero-size faults are never flagged, so a demand for detection fails.
    let out = eva(&[
        "tamper",
        "--trials",
        "20",
        "--rounds",
        "1",
        "--n",
        "3",
        "--multiplier",
        "1e-30",
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
}

#[test]
fn regress_on_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("data.csv");
    let mut text = String::from("x1,x2,x3,target\n");
    for i in 0..60 {
        let (a, b, c) = (i as f64 * 0.37 % 5.0, (i * i) as f64 % 7.0, (i as f64).sin());
        text += &format!("{a},{b},{c},{}\n", 1.0 + 2.0 * a - b + 0.5 * c + 0.1 * (i as f64).cos());
    }
    fs::write(&csv, text).unwrap();
    let report = dir.path().join("regress.json");
    let out = eva(&[
        "regress",
        "--csv",
        csv.to_str().unwrap(),
        "--label",
        "target",
        "--test-fraction",
        "0.2",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    for key in ["mae", "mse", "rmse", "lnre", "r2", "rrs", "mre", "prediction_mre"] {
        assert!(report[key].is_number(), "missing {key}");
    }
    assert_eq!(report["training"]["rounds"], 73);
    assert_eq!(report["eval_samples"], 12);
}

#[test]
fn missing_label_column_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("data.csv");
    fs::write(&csv, "a,b,c\n1,2,3\n").unwrap();
    let out = eva(&["regress", "--csv", csv.to_str().unwrap(), "--label", "price"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("label column"), "{}", stderr(&out));
}

#[test]
fn bad_arguments_are_rejected() {
    assert!(!eva(&["demo", "--protocol", "s9pm"]).status.success());
    assert!(!eva(&["demo", "--dims", "1,2"]).status.success());
    assert!(!eva(&["demo", "--bind", "alice=127.0.0.1:0"]).status.success());
}
