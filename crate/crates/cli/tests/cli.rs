//! End-to-end tests of the `freshmem` binary: exit codes, config
//! resolution order, and the shape of each subcommand's output.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_freshmem"));
    // Ambient config must not leak into tests.
    cmd.env_remove("FRESHMEM_CONFIG");
    cmd
}

fn run_ok(cmd: &mut Command) -> String {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "exit {:?}, stderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 stdout")
}

fn run_err(cmd: &mut Command, want_code: i32) -> Output {
    let out = cmd.output().expect("binary runs");
    assert_eq!(
        out.status.code(),
        Some(want_code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn simulate(dir: &Path, seed: u64) -> (std::path::PathBuf, Vec<u64>, u64) {
    let stream = dir.join("stream.ffs");
    let stdout = run_ok(bin().args([
        "simulate",
        "--seed",
        &seed.to_string(),
        "--out",
        stream.to_str().unwrap(),
    ]));
    let truth: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let boundaries = truth["boundaries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    (stream, boundaries, truth["frames"].as_u64().unwrap())
}

#[test]
fn print_config_emits_the_defaults_verbatim() {
    let stdout = run_ok(bin().arg("--print-config"));
    let expected = "\
window_len = 5
bands = 16
f_min = 0.01
f_max = 0.5
gamma = 0.9
residual_ratio = 0.1
mfm_capacity = 15
mfm_slots = 15
theta_event = 0.4
theta_merge = 0.3
rho_min = 0.0625
rho_max = 0.25
stm_capacity = 40
fallback = merge
";
    assert_eq!(stdout, expected);
}

#[test]
fn flags_beat_config_file_which_beats_defaults() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("freshmem.conf");
    std::fs::write(&cfg, "gamma = 0.5\nwindow_len = 9\n").unwrap();
    let stdout = run_ok(bin().args([
        "--print-config",
        "--config",
        cfg.to_str().unwrap(),
        "--gamma",
        "0.7",
    ]));
    assert!(stdout.contains("gamma = 0.7"), "flag must win: {stdout}");
    assert!(stdout.contains("window_len = 9"), "file must beat defaults");
    assert!(stdout.contains("bands = 16"), "untouched fields stay default");
}

#[test]
fn env_var_is_the_config_file_fallback() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("env.conf");
    std::fs::write(&cfg, "theta_event = 0.25\n").unwrap();
    let stdout = run_ok(
        bin()
            .arg("--print-config")
            .env("FRESHMEM_CONFIG", cfg.to_str().unwrap()),
    );
    assert!(stdout.contains("theta_event = 0.25"));

    // An explicit --config wins over the env var.
    let other = dir.path().join("explicit.conf");
    std::fs::write(&other, "theta_event = 0.35\n").unwrap();
    let stdout = run_ok(
        bin()
            .args(["--print-config", "--config", other.to_str().unwrap()])
            .env("FRESHMEM_CONFIG", cfg.to_str().unwrap()),
    );
    assert!(stdout.contains("theta_event = 0.35"));
}

#[test]
fn usage_problems_exit_two() {
    // No subcommand.
    run_err(&mut bin(), 2);
    // Unknown subcommand (clap).
    run_err(bin().arg("frobnicate"), 2);
    // Config value out of range.
    let out = run_err(bin().args(["--gamma", "1.5", "verify"]), 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("gamma"), "names the bad field: {stderr}");
    // Unknown key in a config file.
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "gama = 0.5\n").unwrap();
    run_err(
        bin().args(["--print-config", "--config", cfg.to_str().unwrap()]),
        2,
    );
    // Ingest without a state destination.
    run_err(bin().args(["ingest", "nowhere.ffs"]), 2);
    // Bench run too short to window-compare.
    run_err(bin().args(["bench", "--steps", "100"]), 2);
}

#[test]
fn broken_input_data_exits_three() {
    let dir = tempdir().unwrap();
    let (stream, _, _) = simulate(dir.path(), 5);
    let bytes = std::fs::read(&stream).unwrap();
    let cut = dir.path().join("cut.ffs");
    std::fs::write(&cut, &bytes[..bytes.len() - 7]).unwrap();
    let out = run_err(bin().args(["ingest", cut.to_str().unwrap(), "--out"]).arg(dir.path().join("s.fms")), 3);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("truncated"), "explains the cut: {stderr}");
    // Missing file is also a data error.
    run_err(
        bin().args(["segment", dir.path().join("absent.ffs").to_str().unwrap()]),
        3,
    );
}

#[test]
fn simulate_ingest_snapshot_round_trip() {
    let dir = tempdir().unwrap();
    let (stream, _, frames) = simulate(dir.path(), 21);
    let state = dir.path().join("state.fms");
    let summary = run_ok(bin().args([
        "ingest",
        stream.to_str().unwrap(),
        "--out",
        state.to_str().unwrap(),
    ]));
    let summary: serde_json::Value = serde_json::from_str(&summary).unwrap();
    assert_eq!(summary["steps"].as_u64().unwrap(), frames);

    let snapshot = run_ok(bin().args(["snapshot", state.to_str().unwrap(), "--tokens"]));
    let snapshot: serde_json::Value = serde_json::from_str(&snapshot).unwrap();
    assert_eq!(snapshot["step"].as_u64().unwrap(), frames);
    assert_eq!(snapshot["fingerprint"], summary["fingerprint"]);
    let sources: Vec<&str> = snapshot["frames"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["source"].as_str().unwrap())
        .collect();
    assert!(sources.contains(&"mfm") && sources.contains(&"stm") && sources.contains(&"short"));
    // Frames carry their payloads when asked.
    assert!(snapshot["frames"].as_array().unwrap()[0]["tokens"].is_array());
}

#[test]
fn segment_recovers_the_simulated_boundaries() {
    let dir = tempdir().unwrap();
    let (stream, truth, _) = simulate(dir.path(), 33);
    let report = run_ok(bin().args(["segment", stream.to_str().unwrap()]));
    let report: serde_json::Value = serde_json::from_str(&report).unwrap();
    let found: Vec<u64> = report["boundaries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    assert_eq!(found, truth);
}

#[test]
fn reconstruct_emits_a_full_frame_at_fixed_precision() {
    let dir = tempdir().unwrap();
    let (stream, _, _) = simulate(dir.path(), 2);
    let state = dir.path().join("state.fms");
    run_ok(bin().args([
        "ingest",
        stream.to_str().unwrap(),
        "--out",
        state.to_str().unwrap(),
    ]));
    let stdout = run_ok(bin().args(["reconstruct", state.to_str().unwrap(), "--tau", "0"]));
    let frame: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(frame["t"].as_u64().unwrap(), 0);
    let tokens = frame["tokens"].as_array().unwrap();
    assert_eq!(tokens.len(), 4);
    assert_eq!(tokens[0].as_array().unwrap().len(), 16);
    // Twelve significant digits in the raw text.
    assert!(stdout.contains('e'), "scientific notation expected");

    // A step that never left the window cannot be re-rendered.
    let out = run_err(
        bin().args(["reconstruct", state.to_str().unwrap(), "--tau", "999"]),
        3,
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("999"));
}

#[test]
fn jsonl_streams_flow_through_the_same_pipeline() {
    let dir = tempdir().unwrap();
    let stream = dir.path().join("stream.jsonl");
    run_ok(bin().args([
        "simulate",
        "--episodes",
        "3",
        "--format",
        "jsonl",
        "--out",
        stream.to_str().unwrap(),
    ]));
    let text = std::fs::read_to_string(&stream).unwrap();
    assert!(text.starts_with("{\"magic\":\"FFS1\""));
    // Format is sniffed on read.
    let report = run_ok(bin().args(["segment", stream.to_str().unwrap()]));
    assert!(report.contains("boundaries"));
}

#[test]
fn out_flag_redirects_primary_output() {
    let dir = tempdir().unwrap();
    let (stream, _, _) = simulate(dir.path(), 8);
    let report_path = dir.path().join("segments.json");
    let stdout = run_ok(bin().args([
        "segment",
        stream.to_str().unwrap(),
        "--out",
        report_path.to_str().unwrap(),
    ]));
    assert!(stdout.is_empty());
    let report = std::fs::read_to_string(&report_path).unwrap();
    assert!(report.contains("boundaries"));
}

#[test]
fn sweep_f1_is_maximal_on_a_plateau_containing_the_default_threshold() {
    let stdout = run_ok(bin().args([
        "sweep",
        "--param",
        "theta_event",
        "--values",
        "0.1:0.9:0.1",
        "--runs",
        "2",
    ]));
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("x,y,series,seed"));
    let mut f1: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 4, "row: {line}");
        if cols[2] == "f1" {
            f1.entry(cols[0].to_string())
                .or_default()
                .push(cols[1].parse().unwrap());
        }
    }
    assert_eq!(f1.len(), 9, "nine swept values");
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let best = f1.values().map(|v| mean(v)).fold(f64::MIN, f64::max);
    let at = |x: &str| mean(&f1[x]);
    // The peak is a plateau that contains 0.4.
    assert_eq!(at("4.00000000000e-1"), best);
    assert_eq!(at("3.00000000000e-1"), best);
    assert_eq!(at("5.00000000000e-1"), best);
}

#[test]
fn sweep_rejects_unknown_parameters() {
    let out = run_err(
        bin().args(["sweep", "--param", "nonsense", "--values", "1,2"]),
        2,
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("nonsense"));
}

#[test]
fn bench_reports_constant_operation_counts() {
    let stdout = run_ok(bin().args(["bench", "--steps", "3000"]));
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["ops_constant"], serde_json::Value::Bool(true));
    assert!(report["late_early_ratio"].as_f64().unwrap() > 0.0);
}

#[test]
fn verify_passes_and_prints_one_line_per_check() {
    let stdout = run_ok(bin().args(["verify", "--seed", "3"]));
    let lines: Vec<&str> = stdout.lines().collect();
    assert!(lines.len() >= 10);
    for line in &lines[..lines.len() - 1] {
        assert!(line.starts_with("PASS "), "unexpected line: {line}");
    }
    assert!(lines.last().unwrap().starts_with("verify: "));
}
