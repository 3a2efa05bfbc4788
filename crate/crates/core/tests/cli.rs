use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use flightmon::{corpus, synth};

fn flightmon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flightmon"))
        .args(args)
        .env_remove("FLIGHTMON_FORMAT")
        .env_remove("FLIGHTMON_MODE")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn analyze_corpus_specs() {
    let dir = tempfile::tempdir().unwrap();
    for c in corpus::ALL {
        let p = write(dir.path(), &format!("{}.lola", c.name), c.source);
        let o = flightmon(&["analyze", s(&p)]);
        assert_eq!(code(&o), 0, "{}: {}", c.name, stderr(&o));
        assert!(stdout(&o).contains("total"));
    }
    let p = write(dir.path(), "h.lola", corpus::HEIGHT.source);
    let o = flightmon(&["analyze", s(&p), "--format", "json"]);
    let last = stdout(&o).lines().last().unwrap().to_string();
    let v: serde_json::Value = serde_json::from_str(&last).unwrap();
    assert_eq!(v["total_bytes"], 1452);
}

#[test]
fn analysis_errors_exit_one_with_positions() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "bad.lola", "input x: Float32\noutput a := y + x\n");
    let o = flightmon(&["analyze", s(&p)]);
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.starts_with(&format!("{}:2:", s(&p))), "{err}");
    assert!(err.contains("name error"), "{err}");
    let p = write(dir.path(), "syntax.lola", "input x: Float32\noutput a := (x\n");
    assert_eq!(code(&flightmon(&["analyze", s(&p)])), 1);
}

#[test]
fn usage_and_io_errors_exit_two() {
    assert_eq!(code(&flightmon(&["analyze", "/nonexistent/spec.lola"])), 2);
    assert_eq!(code(&flightmon(&["frobnicate"])), 2);
    assert_eq!(code(&flightmon(&["report"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let poly = write(dir.path(), "two.csv", "52.31,10.56\n52.32,10.57\n");
    let o = flightmon(&["fence-gen", s(&poly)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("vert"), "{}", stderr(&o));
}

#[test]
fn generated_fence_analyzes() {
    let dir = tempfile::tempdir().unwrap();
    let poly = write(dir.path(), "fence.csv", corpus::FENCE12_POLYGON);
    let out = dir.path().join("fence.lola");
    assert_eq!(code(&flightmon(&["fence-gen", s(&poly), "-o", s(&out)])), 0);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), corpus::GEOFENCE.source);
    let o = flightmon(&["analyze", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = flightmon(&["fence-gen", s(&poly), "--epsilon", "0"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn scaling_report() {
    let o = flightmon(&["report", "--scaling", "1..14"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 15, "{text}");
    let o = flightmon(&["report", "--scaling", "1..14", "--format", "json"]);
    let totals: Vec<u64> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["total_bytes"].as_u64().unwrap())
        .collect();
    assert_eq!(totals.len(), 14);
    assert_eq!(totals[11], 173);
    assert_eq!(code(&flightmon(&["report", "--scaling", "5..2"])), 2);
}

#[test]
fn geofence_replay_reports_every_crossing() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "fence.lola", corpus::GEOFENCE.source);
    let poly = synth::fence_polygon(12, 0);
    let path = synth::sample_path(&synth::crossing_waypoints(&poly), 13);
    let trace = write(dir.path(), "trace.csv", &synth::trajectory_trace(&path, 10).to_csv());
    let out = dir.path().join("verdicts.jsonl");
    let o = flightmon(&["replay", s(&spec), s(&trace), "-o", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("verdicts: 12\n"), "{}", stdout(&o));
    let lines = std::fs::read_to_string(&out).unwrap();
    assert_eq!(lines.lines().count(), 12);

    // Without -o the verdicts go to standard output and the summary to standard error.
    let o = flightmon(&["replay", s(&spec), s(&trace)]);
    assert_eq!(stdout(&o), lines);
    assert!(stderr(&o).contains("verdicts: 12"));

    assert_eq!(code(&flightmon(&["replay", s(&spec), s(&trace), "--strict"])), 3);
    assert_eq!(code(&flightmon(&["check", s(&spec), s(&trace)])), 3);
}

#[test]
fn strict_mode_passes_clean_traces() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "height.lola", corpus::HEIGHT.source);
    let trace = write(dir.path(), "t.csv", "ms,alt\n0,100\n500,100.5\n1000,101\n1500,101\n");
    let o = flightmon(&[
        "check",
        s(&spec),
        s(&trace),
        "--time-column",
        "ms",
        "--time-unit",
        "ms",
        "--bind",
        "alt=height",
        "-o",
        s(&dir.path().join("v.jsonl")),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("verdicts: 0"));
    // Unbound input.
    let o = flightmon(&["check", s(&spec), s(&trace)]);
    assert_eq!(code(&o), 2);
}
