use std::path::Path;
use std::process::{Command, Output};

fn rlloop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rlloop"))
        .args(args)
        .output()
        .expect("spawn rlloop")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn eval_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = rlloop(&["eval", "--controller", "static", "--episodes", "2", "--steps", "50", "--out", path(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(csv.contains("# controller=static\n# episodes=2\n"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 101);
    let summary = String::from_utf8(out.stdout).unwrap();
    assert!(summary.contains("mean_allocation_mc=2945.720000\n"));
    for key in ["beta=", "sla_fraction=", "mean_reward="] {
        assert!(summary.contains(key));
    }
}

#[test]
fn config_file_selects_controller() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("exp.conf");
    std::fs::write(&conf, "traffic_std=3.75\ndegradation_exponent=24\ncontroller=static\nstatic_mc=1500\n").unwrap();
    let out = rlloop(&["eval", "--config", path(&conf), "--episodes", "1", "--steps", "20", "--out", path(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout).unwrap().contains("mean_allocation_mc=1500.000000"));
}

#[test]
fn ppo_eval_needs_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let out = rlloop(&["eval", "--controller", "ppo", "--out", path(dir.path())]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--checkpoint"));
}

#[test]
fn bad_controller_rejected() {
    let out = rlloop(&["eval", "--controller", "pid"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown controller"));
}

#[test]
fn analyze_reports_line_of_malformed_row() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("bad.csv");
    std::fs::write(
        &trace,
        "# seed=1\nstep,active_users,cpu_usage_mc,throughput_mbps,allocation_mc,reward\n0,1,10.0,20.0,500.0,0.9\n1,oops,1,1,500,0.5\n",
    )
    .unwrap();
    let out = rlloop(&["analyze", path(&trace)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));
}

#[test]
fn train_then_analyze_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = rlloop(&["train", "--seed", "3", "--episodes", "1", "--steps", "128", "--out", path(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["trace.csv", "reward_curve.csv", "checkpoint.txt", "summary.txt"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let curve = std::fs::read_to_string(dir.path().join("reward_curve.csv")).unwrap();
    assert!(curve.starts_with("step,reward,moving_avg\n"));
    assert_eq!(curve.lines().count(), 129);
    let analysis = rlloop(&["analyze", path(&dir.path().join("trace.csv")), "--reference-mc", "2945.72"]);
    let text = String::from_utf8(analysis.stdout).unwrap();
    assert!(text.contains("reward_mismatches=0\n"), "{text}");
    assert!(text.contains("cpu_ratio="));
}

#[test]
fn sweep_csv_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = rlloop(&["sweep", "--seeds", "2", "--steps", "100", "--out", path(dir.path())]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("allocation_mc,mean_reward,beta,sla_fraction"));
    assert_eq!(lines.next().unwrap().split(',').next(), Some("500.000000"));
    assert_eq!(csv.lines().count(), 9);
}
