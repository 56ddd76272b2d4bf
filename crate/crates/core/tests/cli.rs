use std::path::Path;
use std::process::{Command, Output};

fn srpm(args: &[&str], cfg: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_srpm"));
    cmd.args(args);
    if let Some(c) = cfg {
        cmd.arg("--config").arg(c);
    }
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const SMALL: &str = "snr_grid_db = [0.0, 6.0]\ntrials_per_point = 200\n[config]\nn = 16\nn_t = 4\n";

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "[config]\nn = 130\nl = 4\n");
    let out = srpm(&["analyze-aber"], Some(&bad));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not divisible"));

    let malformed = write(dir.path(), "m.toml", "seed = = 1\n");
    let out = srpm(&["simulate-aber"], Some(&malformed));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));

    let unknown = write(dir.path(), "u.toml", "seeds = 1\n");
    assert_eq!(srpm(&["simulate-aber"], Some(&unknown)).status.code(), Some(2));

    let missing = dir.path().join("missing.toml");
    assert_eq!(srpm(&["simulate-aber"], Some(&missing)).status.code(), Some(2));
}

#[test]
fn multi_stream_optimization_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.toml", "[config]\nn = 16\nn_t = 4\nn_s = 2\n");
    assert_eq!(srpm(&["optimize-precoder"], Some(&cfg)).status.code(), Some(2));
}

#[test]
fn non_convergence_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SMALL}[sdr]\nmax_iterations = 1\nrel_gap_tol = 0.0\nrel_decrease_tol = 0.0\n");
    let cfg = write(dir.path(), "p.toml", &text);
    let out_path = dir.path().join("w.csv");
    let out = srpm(&["optimize-precoder", "--out", out_path.to_str().unwrap()], Some(&cfg));
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    // Results are still written.
    assert!(std::fs::read_to_string(&out_path).unwrap().contains("false"));
}

#[test]
fn stdout_csv_and_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.toml", SMALL);
    let a = srpm(&["simulate-aber", "--seed", "1"], Some(&cfg));
    let b = srpm(&["simulate-aber", "--seed", "2"], Some(&cfg));
    assert!(a.status.success());
    let text = String::from_utf8(a.stdout.clone()).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("snr_db,mc_aber,"));
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn threads_flag_keeps_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.toml", SMALL);
    let a = srpm(&["bench-detectors", "--threads", "1"], Some(&cfg));
    let b = srpm(&["bench-detectors", "--threads", "3"], Some(&cfg));
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn dump_channel_roundtrips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.toml", SMALL);
    let bin = dir.path().join("ch.bin");
    let out = srpm(&["dump-channel", "--out", bin.to_str().unwrap()], Some(&cfg));
    assert!(out.status.success());
    let mut f = std::fs::File::open(&bin).unwrap();
    let dump = srpm::channels::read_channel_set::<f64, _>(&mut f).unwrap();
    assert_eq!(dump.h_d.shape(), (4, 4));
    assert_eq!(dump.h_r.shape(), (4, 16));
    assert_eq!(dump.g.shape(), (16, 4));
    assert_eq!(dump.base_phases.len(), 16);
}

#[test]
fn json_timing_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.toml", SMALL);
    let out = srpm(&["bench-detectors", "--timing", "--format", "json"], Some(&cfg));
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["command"], "bench-detectors");
    assert!(v["results"][0]["mean_detect_us"].as_f64().unwrap() > 0.0);
    assert_eq!(v["plan"]["timing"], true);
}
