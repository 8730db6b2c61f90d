use std::path::Path;
use std::process::{Command, Output};

fn curbside(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curbside"))
        .args(args)
        .env("CURBSIDE_OUT", out)
        .output()
        .expect("binary runs")
}

#[test]
fn run_writes_outputs_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let o = curbside(&["run", "--seed", "7", "--ticks", "300"], dir);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["trace.csv", "summary.json", "scenario.toml", "curves/speed_profile.csv"] {
        assert!(a.join(f).exists(), "{f} missing");
    }
    assert_eq!(std::fs::read(a.join("trace.csv")).unwrap(), std::fs::read(b.join("trace.csv")).unwrap());
}

#[test]
fn noise_free_run_reports_full_accuracy() {
    let tmp = tempfile::tempdir().unwrap();
    let o = curbside(&["run", "--sigma", "0", "--ticks", "600", "--out"], tmp.path());
    assert!(!o.status.success(), "--out needs a value");
    let dir = tmp.path().join("nf");
    let o = curbside(&["run", "--sigma", "0", "--ticks", "600"], &dir);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("accuracy 100.00%"));
}

#[test]
fn refuses_to_clobber_output() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("keep.txt"), "x").unwrap();
    let o = curbside(&["sweep", "--seeds", "1", "--ticks", "60"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not empty"));
    assert_eq!(std::fs::read_dir(tmp.path()).unwrap().count(), 1);
}

#[test]
fn sweep_aggregates_per_seed_summaries() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("sw");
    let o = curbside(&["sweep", "--seeds", "1-3", "--ticks", "300"], &dir);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(report["runs"].as_array().unwrap().len(), 3);
    assert_eq!(report["aggregate"]["accuracy"]["n"], 3);
    assert!(dir.join("seed-2/summary.json").exists());
}

#[test]
fn metrics_recomputes_from_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let run_dir = tmp.path().join("run");
    assert!(curbside(&["run", "--ticks", "300"], &run_dir).status.success());
    let m_dir = tmp.path().join("m");
    let trace = run_dir.join("trace.csv");
    let o = curbside(&["metrics", "--trace", trace.to_str().unwrap(), "--ticks", "300"], &m_dir);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        std::fs::read_to_string(run_dir.join("summary.json")).unwrap(),
        std::fs::read_to_string(m_dir.join("summary.json")).unwrap()
    );
}

#[test]
fn invalid_override_names_field() {
    let tmp = tempfile::tempdir().unwrap();
    let o = curbside(&["run", "--sigma", "-1"], &tmp.path().join("x"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("radio.sigma"));
}

#[test]
fn quick_accept_passes_and_fault_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let o = curbside(&["accept", "--quick"], tmp.path());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{stdout}");
    assert!(stdout.contains("7/7 criteria passed"));
    let o = curbside(&["accept", "--quick", "--fault-threshold-bias", "0.5"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL [ 1] noise-free classification"));
}
