//! End-to-end runs of the `mukf` binary on a short scenario.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mukf_cli::metrics::TABLE_COLUMNS;
use mukf_core::logio::results::results_header;
use mukf_core::logio::ExperimentConfig;
use mukf_core::sim::{Mission, Segment};

fn mukf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mukf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// 40 s: a short hold, then a 20 m leg.
fn short_config(dir: &Path) -> PathBuf {
    let mut cfg = ExperimentConfig::default();
    cfg.sim.mission = Mission {
        start: [0.0, 0.0, 0.0],
        start_heading: 0.0,
        segments: vec![
            Segment::Hold { duration: 10.0 },
            Segment::Goto {
                north: 20.0,
                east: 0.0,
                speed: 1.0,
            },
        ],
    };
    cfg.sim.duration = Some(40.0);
    let path = dir.join("short.toml");
    std::fs::write(&path, cfg.to_toml()).unwrap();
    path
}

/// Simulates into `dir/sim` and returns the log and truth paths.
fn simulate(dir: &Path, cfg: &Path) -> (PathBuf, PathBuf) {
    let out = dir.join("sim");
    let o = mukf(&["simulate", "--config", s(cfg), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    (out.join("sensors.log"), out.join("truth.csv"))
}

fn first_line(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn simulate_run_evaluate_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path());
    let (log, truth) = simulate(dir.path(), &cfg);
    assert!(std::fs::read_to_string(&log).unwrap().starts_with("#mukf-log"));

    let run_dir = dir.path().join("run");
    let o = mukf(&[
        "run",
        s(&log),
        "--config",
        s(&cfg),
        "--truth",
        s(&truth),
        "--out",
        s(&run_dir),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let results = run_dir.join("results.csv");
    assert_eq!(first_line(&results), results_header().join(","));
    assert!(run_dir.join("updates.csv").exists());
    assert!(run_dir.join("summary.csv").exists());

    let eval_dir = dir.path().join("eval");
    let o = mukf(&[
        "evaluate",
        s(&results),
        "--truth",
        s(&truth),
        "--out",
        s(&eval_dir),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(first_line(&eval_dir.join("metrics.csv")), TABLE_COLUMNS.join(","));
    let cmp = std::fs::read_to_string(eval_dir.join("comparison.txt")).unwrap();
    assert!(cmp.contains("Difference within 2 sigma"));

    // a GPS-aided 40 s run stays within a few metres
    let metrics = std::fs::read_to_string(eval_dir.join("metrics.csv")).unwrap();
    let row: Vec<&str> = metrics.lines().nth(1).unwrap().split(',').collect();
    let err: f64 = row[2].parse().unwrap();
    assert!(err < 3.0, "final error {err}");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path());
    let (log, _) = simulate(dir.path(), &cfg);
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}"));
        let o = mukf(&["run", s(&log), "--config", s(&cfg), "--out", s(&out)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(std::fs::read(out.join("results.csv")).unwrap());
    }
    assert!(outputs[0] == outputs[1]);
}

#[test]
fn usage_and_config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&mukf(&["frobnicate"])), 2);
    assert_eq!(code(&mukf(&["simulate", "--preset", "nope"])), 2);
    assert_eq!(code(&mukf(&["run", "x.log", "--deny", "dvl:9-3"])), 2);

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "model_error = -1.0\n").unwrap();
    let o = mukf(&["simulate", "--config", s(&bad), "--out", s(dir.path())]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.log");
    assert_eq!(code(&mukf(&["run", s(&missing)])), 3);

    let garbage = dir.path().join("garbage.log");
    std::fs::write(&garbage, "not a log\n").unwrap();
    assert_eq!(code(&mukf(&["run", s(&garbage)])), 3);
}

#[test]
fn shifted_truth_is_a_time_base_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path());
    let (log, truth) = simulate(dir.path(), &cfg);
    let out = dir.path().join("run");
    let o = mukf(&["run", s(&log), "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&o), 0);

    // move every truth time stamp by half an IMU period
    let text = std::fs::read_to_string(&truth).unwrap();
    let mut lines = text.lines();
    let mut shifted = format!("{}\n", lines.next().unwrap());
    for l in lines {
        let (t, rest) = l.split_once(',').unwrap();
        let t: f64 = t.parse().unwrap();
        shifted.push_str(&format!("{},{rest}\n", t + 0.005));
    }
    let moved = dir.path().join("shifted.csv");
    std::fs::write(&moved, shifted).unwrap();
    let o = mukf(&["evaluate", s(&out.join("results.csv")), "--truth", s(&moved), "--tol", "0.001"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("time base"));
}
