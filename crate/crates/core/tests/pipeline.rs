use curbside_core::metrics::{summarize, write_curves, write_summary};
use curbside_core::{run, Record, ScenarioConfig, TickTrace};

fn short(sigma: f64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::preset();
    cfg.ticks = 600;
    cfg.seed = 11;
    cfg.radio.sigma = sigma;
    cfg
}

#[test]
fn trace_file_round_trips_and_metrics_agree() {
    let cfg = short(0.3);
    let trace = run(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    trace.write_file(&path).unwrap();
    let back = TickTrace::read_file(&path).unwrap();
    assert_eq!(back, trace);
    assert_eq!(summarize(&back, &cfg), summarize(&trace, &cfg));
}

#[test]
fn curves_and_summary_are_written() {
    let cfg = short(0.3);
    let trace = run(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_curves(dir.path(), &trace, &cfg).unwrap();
    let summary = summarize(&trace, &cfg);
    write_summary(&dir.path().join("summary.json"), &summary).unwrap();
    for f in ["location_rates.csv", "speed_ecdf.csv", "relative_error.csv", "speed_profile.csv", "summary.json"] {
        let text = std::fs::read_to_string(dir.path().join(f)).unwrap();
        assert!(text.lines().count() > 1, "{f} has no data rows");
    }
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(json["seed"], 11);
}

#[test]
fn records_are_ordered_and_alerts_follow_in_street_fixes() {
    let cfg = short(0.0);
    let trace = run(&cfg).unwrap();
    let ticks: Vec<u32> = trace.iter().map(Record::tick).collect();
    assert!(ticks.windows(2).all(|w| w[0] <= w[1]), "records out of tick order");
    assert!(ticks.iter().all(|&t| (1..=cfg.ticks).contains(&t)));
    let mut street_fix_watches = std::collections::BTreeSet::new();
    for r in trace.iter() {
        match r {
            Record::Fix { watch, est_y: Some(_), .. } => {
                street_fix_watches.insert(*watch);
            }
            Record::Alert { watch, .. } => assert!(street_fix_watches.contains(watch)),
            _ => {}
        }
    }
    assert!(summarize(&trace, &cfg).alerts > 0);
}

#[test]
fn empty_street_stays_quiet() {
    let mut cfg = ScenarioConfig::empty_street();
    cfg.ticks = 120;
    let trace = run(&cfg).unwrap();
    assert!(trace.is_empty());
}
