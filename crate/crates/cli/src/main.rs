use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use curbside_core::acceptance::{run_suite, AcceptOptions};
use curbside_core::config::{load_scenario_file, Faults};
use curbside_core::experiment::sweep;
use curbside_core::metrics::{summarize, write_curves, write_summary};
use curbside_core::{run, Exec, ScenarioConfig, TickTrace};

#[derive(Parser)]
#[command(name = "curbside", version, about = "Parked-car pedestrian detection simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write its trace, summary and curves.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Simulate one scenario per seed and aggregate the summaries.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Seeds as a comma list and/or inclusive ranges, e.g. `1-10` or `3,7,20-22`.
        #[arg(long, default_value = "1-10", value_parser = parse_seeds)]
        seeds: Seeds,
        /// Also write every run's trace.
        #[arg(long)]
        traces: bool,
        /// Run the seeds one after another.
        #[arg(long)]
        sequential: bool,
    },
    /// Recompute the summary and curves of an existing trace.
    Metrics {
        /// Trace written by `run`.
        #[arg(long)]
        trace: PathBuf,
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run the acceptance suite; exits 0 only if every criterion passes.
    Accept {
        /// Only the criteria that need no noisy runs.
        #[arg(long)]
        quick: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        sequential: bool,
        /// Shift every classification threshold (harness self-test).
        #[arg(long, hide = true, default_value_t = 0.0)]
        fault_threshold_bias: f64,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario TOML; omitted keys keep the reference preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// RSS noise standard deviation in mW; 0 disables noise.
    #[arg(long, allow_negative_numbers = true)]
    sigma: Option<f64>,
    #[arg(long)]
    ticks: Option<u32>,
    /// Approaching cars ignore cautions and keep cruising.
    #[arg(long)]
    no_controller: bool,
}

#[derive(Args)]
struct OutArgs {
    /// Output directory; must not exist yet or be empty.
    #[arg(long, env = "CURBSIDE_OUT", default_value = "curbside-out")]
    out: PathBuf,
}

#[derive(Clone, Debug)]
struct Seeds(Vec<u64>);

fn parse_seeds(s: &str) -> Result<Seeds, String> {
    let mut seeds = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let a: u64 = a.trim().parse().map_err(|_| format!("bad seed `{a}`"))?;
                let b: u64 = b.trim().parse().map_err(|_| format!("bad seed `{b}`"))?;
                if a > b {
                    return Err(format!("empty seed range `{part}`"));
                }
                seeds.extend(a..=b);
            }
            None => seeds.push(part.parse().map_err(|_| format!("bad seed `{part}`"))?),
        }
    }
    if seeds.is_empty() {
        return Err("at least one seed is required".into());
    }
    Ok(Seeds(seeds))
}

impl ScenarioArgs {
    /// Preset, then file, then flags.
    fn resolve(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(path) => load_scenario_file(path).with_context(|| format!("loading {}", path.display()))?,
            None => ScenarioConfig::preset(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(sigma) = self.sigma {
            cfg.radio.sigma = sigma;
        }
        if let Some(ticks) = self.ticks {
            cfg.ticks = ticks;
        }
        if self.no_controller {
            cfg.controller.enabled = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Creates `dir`, refusing to write into one that already holds files.
fn claim_dir(dir: &Path) -> Result<()> {
    if dir.exists() {
        let mut entries = fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))?;
        if entries.next().is_some() {
            bail!("output directory {} is not empty; refusing to overwrite", dir.display());
        }
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_run(dir: &Path, trace: &TickTrace, cfg: &ScenarioConfig) -> Result<()> {
    let curves = dir.join("curves");
    fs::create_dir_all(&curves)?;
    write_curves(&curves, trace, cfg)?;
    write_summary(&dir.join("summary.json"), &summarize(trace, cfg))?;
    fs::write(dir.join("scenario.toml"), cfg.to_toml())?;
    Ok(())
}

fn print_summary(cfg: &ScenarioConfig, trace: &TickTrace) {
    let s = summarize(trace, cfg);
    let pct = |v: Option<f64>| v.map_or("n/a".to_string(), |a| format!("{a:.2}%"));
    let m = |v: Option<f64>| v.map_or("n/a".to_string(), |a| format!("{a:.4}"));
    println!("seed {} sigma {} ticks {}", s.seed, s.sigma, s.ticks);
    println!(
        "accuracy {} over {} observations (pedestrian level {})",
        pct(s.accuracy),
        s.confusion.total(),
        pct(s.pedestrian_accuracy)
    );
    println!(
        "E_y {} m  E_d {} m  E_v {} m/s  E_delta {} s  E_D {} m",
        m(s.rmse.e_y),
        m(s.rmse.e_d),
        m(s.rmse.e_v),
        m(s.rmse.e_delta),
        m(s.rmse.e_distance)
    );
    println!(
        "{} crossings, {} alerts, {} collision samples, mean vehicle speed {} m/s",
        s.crossings,
        s.alerts,
        s.collisions,
        m(s.mean_vehicle_speed)
    );
}

fn cmd_run(scenario: &ScenarioArgs, out: &OutArgs) -> Result<()> {
    let cfg = scenario.resolve()?;
    claim_dir(&out.out)?;
    let trace = run(&cfg)?;
    trace.write_file(&out.out.join("trace.csv"))?;
    write_run(&out.out, &trace, &cfg)?;
    print_summary(&cfg, &trace);
    println!("wrote {}", out.out.display());
    Ok(())
}

fn cmd_sweep(scenario: &ScenarioArgs, out: &OutArgs, seeds: &[u64], traces: bool, sequential: bool) -> Result<()> {
    let cfg = scenario.resolve()?;
    claim_dir(&out.out)?;
    let exec = if sequential { Exec::Sequential } else { Exec::Parallel };
    let report = sweep(&cfg, seeds, exec)?;
    for r in &report.runs {
        let dir = out.out.join(format!("seed-{}", r.seed));
        fs::create_dir_all(&dir)?;
        write_summary(&dir.join("summary.json"), r)?;
        if traces {
            let mut c = cfg.clone();
            c.seed = r.seed;
            run(&c)?.write_file(&dir.join("trace.csv"))?;
        }
    }
    write_summary(&out.out.join("sweep.json"), &report)?;
    let a = &report.aggregate;
    let line = |name: &str, s: Option<curbside_core::experiment::Stat>| match s {
        Some(s) => println!("{name:<18} {:>10.4} +/- {:.4} (std {:.4}, n {})", s.mean, s.ci95(), s.std, s.n),
        None => println!("{name:<18} {:>10}", "n/a"),
    };
    line("accuracy %", a.accuracy);
    line("errors within 1 m", a.errors_within_1m);
    line("E_y m", a.e_y);
    line("E_d m", a.e_d);
    line("E_v m/s", a.e_v);
    line("E_delta s", a.e_delta);
    line("E_D m", a.e_distance);
    line("collisions", a.collisions);
    println!("wrote {}", out.out.display());
    Ok(())
}

fn cmd_metrics(trace_path: &Path, scenario: &ScenarioArgs, out: &OutArgs) -> Result<()> {
    let cfg = scenario.resolve()?;
    let trace = TickTrace::read_file(trace_path).with_context(|| format!("reading {}", trace_path.display()))?;
    claim_dir(&out.out)?;
    write_run(&out.out, &trace, &cfg)?;
    print_summary(&cfg, &trace);
    println!("wrote {}", out.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { scenario, out } => cmd_run(scenario, out).map(|_| true),
        Command::Sweep {
            scenario,
            out,
            seeds,
            traces,
            sequential,
        } => cmd_sweep(scenario, out, &seeds.0, *traces, *sequential).map(|_| true),
        Command::Metrics { trace, scenario, out } => cmd_metrics(trace, scenario, out).map(|_| true),
        Command::Accept {
            quick,
            seed,
            sequential,
            fault_threshold_bias,
            json,
        } => {
            let opts = AcceptOptions {
                quick: *quick,
                exec: if *sequential { Exec::Sequential } else { Exec::Parallel },
                seed: *seed,
                faults: Faults {
                    threshold_bias: *fault_threshold_bias,
                },
            };
            let report = run_suite(&opts);
            println!("{report}");
            match json {
                Some(path) => write_summary(path, &report).map(|_| report.all_passed()).map_err(Into::into),
                None => Ok(report.all_passed()),
            }
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::parse_seeds;

    #[test]
    fn seed_lists_and_ranges() {
        assert_eq!(parse_seeds("1-3,7").unwrap().0, vec![1, 2, 3, 7]);
        assert_eq!(parse_seeds("5").unwrap().0, vec![5]);
        assert!(parse_seeds("3-1").is_err());
        assert!(parse_seeds("").is_err());
        assert!(parse_seeds("x").is_err());
    }
}
