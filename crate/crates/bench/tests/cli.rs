use std::path::Path;
use std::process::{Command, Output};

use snn_bench::{DcaSummary, RunSpec};

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_snn-bench"))
        .args(args)
        .output()
        .expect("spawn snn-bench")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn sweep_writes_report_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&bench(&["--duration-ms", "1000", "--threads", "1,2", "--out", out]));
    let csv = read(&dir.path().join("report.csv"));
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "threads,execution_s,speed_factor,performance_gain,total_spikes");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1,") && lines[1].contains(",,"));
    assert!(lines[2].starts_with("2,"));
    for f in ["report.json", "raster.csv", "raster.groups.csv", "perf.csv"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
}

#[test]
fn json_only_skips_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&bench(&["--duration-ms", "200", "--format", "json", "--out", out]));
    assert!(dir.path().join("report.json").exists());
    assert!(!dir.path().join("report.csv").exists());
}

#[test]
fn invalid_arguments_fail() {
    assert!(!bench(&["--threads", "0"]).status.success());
    assert!(!bench(&["--model", "nope"]).status.success());
    assert!(!bench(&["--config", "/nonexistent/run.json"]).status.success());
    assert!(!bench(&["--model", "from-file"]).status.success());
}

#[test]
fn print_config_applies_overrides() {
    let out = ok(&bench(&["--model", "synfire", "--steps-per-ms", "4", "--seed", "7", "--print-config"]));
    let spec: RunSpec = serde_json::from_str(&out).unwrap();
    assert_eq!(spec.kernel.steps_per_ms, 4);
    assert_eq!(spec.seed, Some(7));
    assert_eq!(spec.model, snn_bench::ModelKind::Synfire);
}

#[test]
fn exported_network_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("net.json");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&bench(&[
        "--duration-ms", "1000", "--export-network", net.to_str().unwrap(), "--out", a.to_str().unwrap(),
    ]));
    ok(&bench(&["--network", net.to_str().unwrap(), "--duration-ms", "1000", "--out", b.to_str().unwrap()]));
    assert_eq!(read(&a.join("raster.csv")), read(&b.join("raster.csv")));
}

#[test]
fn dca_run_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&bench(&["--dca", "--threads", "4", "--duration-ms", "500", "--out", out]));
    let summary: DcaSummary = serde_json::from_str(&read(&dir.path().join("dca_summary.json"))).unwrap();
    assert_eq!(summary.initial_workers, 4);
    assert!(summary.worker_ms <= summary.fixed_max_worker_ms);
    let trace = read(&dir.path().join("dca_trace.csv"));
    assert!(trace.starts_with("model_ms,wall_ms,workers,decision"));
    assert_eq!(trace.lines().count(), 501);
}

#[test]
fn calibrate_writes_usable_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("synfire.json");
    let out = ok(&bench(&[
        "calibrate", "--grid-min", "1.0", "--grid-max", "1.5", "--grid-step", "0.25", "--write", cfg.to_str().unwrap(),
    ]));
    assert!(out.contains("picked w_ee = 1.25"), "{out}");
    let spec = RunSpec::from_path(&cfg).unwrap();
    assert_eq!(spec.synfire.w_ee, 1.25);
    assert_eq!(spec.model, snn_bench::ModelKind::Synfire);
}
