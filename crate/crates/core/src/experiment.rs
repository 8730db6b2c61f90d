//! Batches of independent runs: seed sweeps with mean/stddev aggregation and
//! the Monte Carlo check of the expected clear-transmission count.

use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::metrics::{summarize, RunSummary};
use crate::parallel::{map, Exec};
use crate::rng::{indexed_rng, Stream};
use crate::signal::clear_count;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Stat { n, mean, std })
    }

    /// Half-width of the normal-approximation 95% interval of the mean.
    pub fn ci95(&self) -> f64 {
        1.96 * self.std / (self.n as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAggregate {
    pub seeds: Vec<u64>,
    pub accuracy: Option<Stat>,
    pub errors_within_1m: Option<Stat>,
    pub e_y: Option<Stat>,
    pub e_d: Option<Stat>,
    pub e_v: Option<Stat>,
    pub e_delta: Option<Stat>,
    pub e_distance: Option<Stat>,
    pub collisions: Option<Stat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub runs: Vec<RunSummary>,
    pub aggregate: SweepAggregate,
}

fn stat_of(runs: &[RunSummary], f: impl Fn(&RunSummary) -> Option<f64>) -> Option<Stat> {
    let vals: Vec<f64> = runs.iter().filter_map(f).collect();
    Stat::of(&vals)
}

pub fn aggregate(runs: &[RunSummary]) -> SweepAggregate {
    SweepAggregate {
        seeds: runs.iter().map(|r| r.seed).collect(),
        accuracy: stat_of(runs, |r| r.accuracy),
        errors_within_1m: stat_of(runs, |r| r.errors_within_1m),
        e_y: stat_of(runs, |r| r.rmse.e_y),
        e_d: stat_of(runs, |r| r.rmse.e_d),
        e_v: stat_of(runs, |r| r.rmse.e_v),
        e_delta: stat_of(runs, |r| r.rmse.e_delta),
        e_distance: stat_of(runs, |r| r.rmse.e_distance),
        collisions: stat_of(runs, |r| Some(r.collisions as f64)),
    }
}

/// Runs `cfg` once per seed; each run stays single-threaded.
pub fn sweep(cfg: &ScenarioConfig, seeds: &[u64], exec: Exec) -> Result<SweepReport> {
    cfg.validate()?;
    let runs: Vec<RunSummary> = map(exec, seeds, |&seed| {
        let mut c = cfg.clone();
        c.seed = seed;
        let trace = crate::engine::run(&c).expect("config validated");
        summarize(&trace, &c)
    });
    let aggregate = aggregate(&runs);
    Ok(SweepReport { runs, aggregate })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarlo {
    pub k: u32,
    pub m: u32,
    pub trials: u64,
    pub mean: f64,
    pub std_err: f64,
}

const MC_CHUNKS: u64 = 64;

/// Empirical mean clear count of `k` transmitters in `m` slots. Trials are
/// split into fixed chunks with their own streams, so the result does not
/// depend on `exec`.
pub fn monte_carlo_clear(k: u32, m: u32, trials: u64, seed: u64, exec: Exec) -> MonteCarlo {
    let chunks: Vec<u64> = (0..MC_CHUNKS.min(trials.max(1))).collect();
    let n_chunks = chunks.len() as u64;
    let parts: Vec<(f64, f64, u64)> = map(exec, &chunks, |&c| {
        let n = trials / n_chunks + u64::from(c < trials % n_chunks);
        let mut rng = indexed_rng(seed, Stream::Slots, c ^ (u64::from(k) << 32) ^ (u64::from(m) << 48));
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let x = clear_count(k as usize, m, &mut rng) as f64;
            s += x;
            s2 += x * x;
        }
        (s, s2, n)
    });
    let (s, s2, n) = parts
        .into_iter()
        .fold((0.0, 0.0, 0u64), |a, p| (a.0 + p.0, a.1 + p.1, a.2 + p.2));
    let nf = n as f64;
    let mean = s / nf;
    let var = if n > 1 { (s2 - nf * mean * mean) / (nf - 1.0) } else { 0.0 };
    MonteCarlo {
        k,
        m,
        trials: n,
        mean,
        std_err: (var.max(0.0) / nf).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::expected_clear;

    #[test]
    fn stat_basics() {
        let s = Stat::of(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.std, 1.0);
        assert_eq!(Stat::of(&[5.0]).unwrap().std, 0.0);
        assert!(Stat::of(&[]).is_none());
    }

    #[test]
    fn monte_carlo_schedule_independent() {
        let a = monte_carlo_clear(8, 50, 5000, 3, Exec::Sequential);
        let b = monte_carlo_clear(8, 50, 5000, 3, Exec::Parallel);
        assert_eq!(a, b);
        assert_eq!(a.trials, 5000);
        assert!((a.mean - expected_clear(8, 50)).abs() < 4.0 * a.std_err);
    }

    #[test]
    fn single_seed_aggregate_is_the_run() {
        let mut cfg = ScenarioConfig::preset();
        cfg.ticks = 300;
        let rep = sweep(&cfg, &[4], Exec::Parallel).unwrap();
        assert_eq!(rep.runs.len(), 1);
        let acc = rep.aggregate.accuracy.unwrap();
        assert_eq!(acc.mean, rep.runs[0].accuracy.unwrap());
        assert_eq!(acc.std, 0.0);
    }
}
