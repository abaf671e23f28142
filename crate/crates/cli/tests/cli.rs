use std::path::Path;
use std::process::{Command, Output};

fn airship(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_airship")).args(args).env("RUST_BACKTRACE", "0").output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_log_summary_and_replayable_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let out = airship(&["run", "--preset", "exp4-wind-loiter", "--duration", "3", "--seed", "5", "--out", path(&first)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["telemetry.csv", "summary.json", "scenario.json", "vehicle.json"] {
        assert!(first.join(f).exists(), "{f}");
    }

    let second = dir.path().join("second");
    let out = airship(&["run", path(&first.join("scenario.json")), "--out", path(&second)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let a = std::fs::read(first.join("telemetry.csv")).unwrap();
    assert_eq!(a, std::fs::read(second.join("telemetry.csv")).unwrap());
    assert_eq!(String::from_utf8_lossy(&a).lines().count(), 151);

    let out = airship(&["summarize", path(&first.join("telemetry.csv"))]);
    assert!(out.status.success());
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["samples"], 150);
}

#[test]
fn invalid_scenario_fails_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.json");
    std::fs::write(&file, r#"{"name": "x", "mode": "loiter", "duration": "long"}"#).unwrap();
    let out = airship(&["run", path(&file), "--out", path(&dir.path().join("o"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("duration"));

    std::fs::write(&file, r#"{"name": "x", "mode": "loiter", "duration": 5}"#).unwrap();
    let out = airship(&["run", path(&file), "--out", path(&dir.path().join("o"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("loiter"));
}

#[test]
fn unknown_preset_lists_the_available_ones() {
    let out = airship(&["run", "--preset", "nope"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("exp2-loiter"));
}

#[test]
fn summarize_rejects_foreign_csv() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("log.csv");
    std::fs::write(&file, "a,b\n1,2\n").unwrap();
    let out = airship(&["summarize", path(&file)]);
    assert!(!out.status.success());
}

#[test]
fn exported_vehicle_drives_a_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let vehicle = dir.path().join("blimp.json");
    assert!(airship(&["export-vehicle", "--out", path(&vehicle)]).status.success());
    let scenario = dir.path().join("s.json");
    std::fs::write(
        &scenario,
        r#"{"name": "hover", "vehicle": "blimp.json", "mode": "manual", "duration": 1}"#,
    )
    .unwrap();
    let out = airship(&["run", path(&scenario), "--out", path(&dir.path().join("o"))]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn presets_are_listed() {
    let out = airship(&["presets"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().any(|l| l == "exp5-deflate-loiter"));
}
