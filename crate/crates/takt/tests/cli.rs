//! End-to-end checks of the `takt` binary: subcommand wiring, file
//! handoffs between stages, and the exit-code convention (0 clean,
//! 3 anomalies found, 64 usage, 65 bad input).

use std::path::Path;
use std::process::{Command, Output};

fn takt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_takt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

#[test]
fn pipeline_round_trip_with_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path();
    let train = base.join("train");
    let test = base.join("test");

    let out = takt(&["simulate", "--out", path(&train)]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = takt(&[
        "simulate",
        "--out",
        path(&test),
        "--fault",
        "clogging:1:3:1:5200",
    ]);
    assert!(out.status.success());

    let automaton = base.join("automaton.json");
    let out = takt(&[
        "learn",
        "--samples",
        path(&train.join("samples.jsonl")),
        "--initial",
        path(&train.join("initial_state.json")),
        "--out",
        path(&automaton),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = String::from_utf8_lossy(&out.stdout);
    assert!(summary.contains("\"states\": 7"), "{summary}");

    // clean log: exit 0, no reports
    let clean = base.join("clean.jsonl");
    let out = takt(&[
        "detect",
        "--automaton",
        path(&automaton),
        "--samples",
        path(&train.join("samples.jsonl")),
        "--out",
        path(&clean),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&clean).unwrap(), "");

    // faulted log: exit 3, one wrong-timing report
    let anomalies = base.join("anomalies.jsonl");
    let out = takt(&[
        "detect",
        "--automaton",
        path(&automaton),
        "--samples",
        path(&test.join("samples.jsonl")),
        "--out",
        path(&anomalies),
        "--syndrome-window",
        "300000",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let log = std::fs::read_to_string(&anomalies).unwrap();
    assert!(log.contains("\"kind\":\"WrongTiming\""), "{log}");
    assert!(log.contains("\"kind\":\"SyndromeIndex\""), "{log}");

    let kg = base.join("kg");
    let out = takt(&[
        "kg",
        "export",
        "--automaton",
        path(&automaton),
        "--hierarchy",
        path(&train.join("hierarchy.csv")),
        "--devices",
        path(&train.join("devices.csv")),
        "--anomalies",
        path(&anomalies),
        "--out",
        path(&kg),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let out = takt(&[
        "kg",
        "query",
        "--graph",
        path(&kg.join("merged.ttl")),
        "--cq",
        "CQ10",
    ]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout), "?deviation\n5.2\n");

    // a query file against the same export
    let query_path = base.join("states.json");
    std::fs::write(
        &query_path,
        r#"{"select": ["?s"], "where": [["?s", "a", "sm:State"]]}"#,
    )
    .unwrap();
    let out = takt(&[
        "kg",
        "query",
        "--graph",
        path(&kg.join("merged.ttl")),
        "--query",
        path(&query_path),
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(
        stdout.lines().count(),
        8,
        "header plus seven states: {stdout}"
    );
}

#[test]
fn learn_on_empty_log_yields_single_state_automaton() {
    let dir = tempfile::tempdir().unwrap();
    let samples = dir.path().join("empty.jsonl");
    std::fs::write(&samples, "").unwrap();
    let initial = dir.path().join("initial.json");
    std::fs::write(
        &initial,
        r#"{"signal_ordering": ["ValveA", "PumpB"], "values": [0, 0]}"#,
    )
    .unwrap();
    let out_path = dir.path().join("automaton.json");
    let out = takt(&[
        "learn",
        "--samples",
        path(&samples),
        "--initial",
        path(&initial),
        "--out",
        path(&out_path),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(doc["states"].as_object().unwrap().len(), 1);
    assert_eq!(doc["transitions"].as_array().unwrap().len(), 0);
    assert_eq!(doc["initial"], 0);
}

#[test]
fn usage_errors_exit_64() {
    let out = takt(&["simulate", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(64));
    let out = takt(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn missing_inputs_exit_65_and_name_the_file() {
    let out = takt(&[
        "learn",
        "--samples",
        "/nonexistent/samples.jsonl",
        "--initial",
        "/nonexistent/initial.json",
        "--out",
        "/tmp/never-written.json",
    ]);
    assert_eq!(out.status.code(), Some(65));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("/nonexistent/initial.json"), "{stderr}");
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(takt(&["--help"]).status.code(), Some(0));
    assert_eq!(takt(&["--version"]).status.code(), Some(0));
    assert_eq!(takt(&["kg", "--help"]).status.code(), Some(0));
}
