use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use coflow_ocs::baselines::BaselineKind;
use coflow_ocs::experiment::{self, Algorithm, ExperimentConfig, Seeds};

/// Coflow scheduling simulator for multi-core optical circuit switches.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every sweep point, seed and algorithm of a config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Run only this seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (overrides `output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Compare the main algorithm against this baseline only.
        #[arg(long)]
        baseline: Option<BaselineKind>,
    },
    /// Check a schedule file for feasibility and bound audits.
    Verify {
        /// Schedule JSON written by `run` with `write_schedules`.
        #[arg(long)]
        schedule: PathBuf,
        /// Trace CSV of the scheduled workload.
        #[arg(long)]
        trace: PathBuf,
    },
    /// Compare the main algorithm with exhaustive search on small instances.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the workload a config generates for one seed as a trace CSV.
    GenWorkload {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(path: &PathBuf, seed: Option<u64>, out: Option<PathBuf>) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = seed {
        config.seeds = Seeds::List(vec![seed]);
    }
    if let Some(out) = out {
        config.output_dir = out;
    }
    Ok(config)
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    let pool = experiment::thread_pool()?;
    match cli.command {
        Command::Run { config, seed, out, baseline } => {
            let mut config = load(&config, seed, out)?;
            if let Some(kind) = baseline {
                config.algorithms = vec![Algorithm::Ours, Algorithm::from(kind)];
            }
            let output = pool.install(|| experiment::cmd_run(&config))?;
            let failed = output.report.runs.iter().filter(|r| !r.all_checks_passed).count();
            println!(
                "{} rows written to {}",
                output.rows.len(),
                config.output_dir.join("results.csv").display()
            );
            if failed > 0 {
                println!("{failed} of {} runs failed at least one bound audit (see report.json)", output.report.runs.len());
            }
        }
        Command::Verify { schedule, trace } => {
            let outcome = experiment::cmd_verify(&schedule, &trace)
                .with_context(|| format!("verifying {}", schedule.display()))?;
            for line in outcome.violations.iter().chain(&outcome.audit_failures) {
                println!("{line}");
            }
            if !outcome.violations.is_empty() {
                return Ok(ExitCode::from(1));
            }
            if !outcome.audit_failures.is_empty() {
                return Ok(ExitCode::from(2));
            }
            println!("ok: schedule is feasible and every applicable bound holds");
        }
        Command::Oracle { config, seed, out } => {
            let config = load(&config, seed, out)?;
            let rows = pool.install(|| experiment::cmd_oracle(&config))?;
            let max = rows.iter().map(|r| r.algorithm_over_oracle).fold(f64::NAN, f64::max);
            let below = rows.iter().filter(|r| r.algorithm_over_oracle < 1.0 - 1e-9).count();
            println!("{} instances, max algorithm/oracle ratio {max}", rows.len());
            if below > 0 {
                bail!("{below} instances where the algorithm beat the exhaustive search");
            }
        }
        Command::GenWorkload { config, seed, out } => {
            let config = load(&config, None, None)?;
            let w = experiment::cmd_gen_workload(&config, seed, &out)?;
            println!("{} coflows, {} flows written to {}", w.len(), w.total_flows(), out.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}
