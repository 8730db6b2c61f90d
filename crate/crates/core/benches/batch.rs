use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use curbside_core::acceptance::random_scenario;
use curbside_core::experiment::{monte_carlo_clear, sweep};
use curbside_core::metrics::summarize;
use curbside_core::parallel::map;
use curbside_core::{run, Exec, ScenarioConfig};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn monte_carlo(c: &mut Criterion) {
    let mut g = c.benchmark_group("monte_carlo_clear_count");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new(name, "k8_m50_1e5"), |b| {
            b.iter(|| monte_carlo_clear(8, 50, 100_000, black_box(1), exec))
        });
    }
    g.finish();
}

fn seed_sweep(c: &mut Criterion) {
    let mut cfg = ScenarioConfig::preset();
    cfg.ticks = 900;
    let seeds: Vec<u64> = (1..=8).collect();
    let mut g = c.benchmark_group("seed_sweep");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new(name, "8_seeds_900_ticks"), |b| {
            b.iter(|| sweep(black_box(&cfg), &seeds, exec).unwrap())
        });
    }
    g.finish();
}

fn scenario_batch(c: &mut Criterion) {
    let ids: Vec<u64> = (0..100).collect();
    let cfgs: Vec<ScenarioConfig> = ids.iter().map(|&i| random_scenario(1, i)).collect();
    let mut g = c.benchmark_group("scenario_batch");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new(name, "100_scenarios"), |b| {
            b.iter(|| {
                map(exec, &cfgs, |cfg| {
                    let t = run(cfg).unwrap();
                    summarize(&t, cfg).collisions
                })
            })
        });
    }
    g.finish();
}

criterion_group!(benches, monte_carlo, seed_sweep, scenario_batch);
criterion_main!(benches);
