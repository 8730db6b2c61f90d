use curbside_core::experiment::sweep;
use curbside_core::{run, Exec, Record, ScenarioConfig};

fn cfg(seed: u64, sigma: f64) -> ScenarioConfig {
    let mut c = ScenarioConfig::preset();
    c.seed = seed;
    c.ticks = 900;
    c.radio.sigma = sigma;
    c
}

#[test]
fn same_seed_same_bytes() {
    let a = run(&cfg(5, 0.3)).unwrap().to_csv_bytes().unwrap();
    let b = run(&cfg(5, 0.3)).unwrap().to_csv_bytes().unwrap();
    assert_eq!(a, b);
}

#[test]
fn different_seeds_differ() {
    let a = run(&cfg(5, 0.3)).unwrap().to_csv_bytes().unwrap();
    let b = run(&cfg(6, 0.3)).unwrap().to_csv_bytes().unwrap();
    assert_ne!(a, b);
}

#[test]
fn noise_does_not_perturb_traffic() {
    let motion = |sigma: f64| {
        let mut c = cfg(8, sigma);
        c.controller.enabled = false;
        run(&c)
            .unwrap()
            .iter()
            .filter(|r| matches!(r, Record::Pedestrian { .. } | Record::Vehicle { .. }))
            .cloned()
            .collect::<Vec<_>>()
    };
    assert_eq!(motion(0.0), motion(0.3));
}

#[test]
fn separate_noise_seed_keeps_traffic() {
    let mut a = cfg(8, 0.3);
    a.controller.enabled = false;
    let mut b = a.clone();
    b.radio.noise_seed = Some(99);
    let peds = |c: &ScenarioConfig| {
        run(c)
            .unwrap()
            .iter()
            .filter(|r| matches!(r, Record::Pedestrian { .. }))
            .cloned()
            .collect::<Vec<_>>()
    };
    let fixes = |c: &ScenarioConfig| run(c).unwrap().iter().filter(|r| matches!(r, Record::Fix { .. })).count();
    assert_eq!(peds(&a), peds(&b));
    assert_ne!(run(&a).unwrap(), run(&b).unwrap());
    assert!(fixes(&a) > 0 && fixes(&b) > 0);
}

#[test]
fn sweep_is_schedule_independent() {
    let seeds = [1, 2, 3, 4];
    let s = sweep(&cfg(0, 0.3), &seeds, Exec::Sequential).unwrap();
    let p = sweep(&cfg(0, 0.3), &seeds, Exec::Parallel).unwrap();
    assert_eq!(s, p);
    assert_eq!(s.runs.iter().map(|r| r.seed).collect::<Vec<_>>(), seeds);
}
