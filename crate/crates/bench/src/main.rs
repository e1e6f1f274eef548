use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use isat_core::check::dump_rules;
use isat_core::experiment::{self, Axis, ExperimentConfig, ExperimentResult};
use isat_core::tpcc::{self, WorkloadConfig};
use isat_core::{CompletenessLevel, Interval, StrategyMode};

#[derive(Parser)]
#[command(name = "bench", about = "Buffered-rate experiments over the TPC-C workload")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write per-trial rows.
    Run(Base),
    /// Run one configuration per value of an axis.
    Sweep {
        #[arg(long)]
        axis: Axis,
        /// Comma-separated values, e.g. `2,5,10,50` or `complete,none`.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[command(flatten)]
        base: Base,
    },
    /// Same seeded workloads with complete and with no invariant information.
    Baseline(Base),
    /// Print the rule table, one line per (kind, action, action, level).
    RulesDump,
    /// Print the generated stream of the first trial, one transaction per line.
    Dump(Base),
}

#[derive(Args, Clone)]
struct Base {
    #[arg(long, default_value = "5")]
    si: Interval,
    #[arg(long, default_value = "inf")]
    ri: Interval,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = "complete")]
    completeness: CompletenessLevel,
    #[arg(long, default_value = "suspicious")]
    strategy: StrategyMode,
    #[arg(long, default_value_t = 0.8)]
    review_fraction: f64,
    /// Probability that a reviewed transaction is accepted rather than removed.
    #[arg(long, default_value_t = 0.0)]
    accept_share: f64,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Base {
    fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            workload: WorkloadConfig {
                n_transactions: self.n,
                si: self.si,
                ri: self.ri,
                review_fraction: self.review_fraction,
                accept_share: self.accept_share,
                seed: self.seed,
                ..WorkloadConfig::default()
            },
            completeness: self.completeness,
            strategy: self.strategy,
            trials: self.trials,
        }
    }

    fn writer(&self) -> io::Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(path) => Box::new(File::create(path)?),
            None => Box::new(io::stdout().lock()),
        })
    }
}

fn summarize(r: &ExperimentResult) {
    let c = &r.config;
    log::info!(
        "n={} si={} ri={} {} {}: rate {:.4} (sd {:.4}), count {:.2} (sd {:.2})",
        c.workload.n_transactions,
        c.workload.si,
        c.workload.ri,
        c.completeness,
        c.strategy,
        r.mean_rate(),
        r.std_rate(),
        r.mean_count(),
        r.std_count()
    );
}

fn emit(base: &Base, results: &[ExperimentResult]) -> Result<(), Box<dyn std::error::Error>> {
    results.iter().for_each(summarize);
    experiment::write_csv(results, base.writer()?)?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.command {
        Command::Run(base) => {
            let result = experiment::run_experiment(&base.config())?;
            emit(&base, &[result])
        }
        Command::Sweep { axis, values, base } => {
            let results = experiment::run_sweep(axis, &values, &base.config())?;
            emit(&base, &results)
        }
        Command::Baseline(base) => {
            if base.ri != Interval::Infinite {
                log::warn!("baseline comparison with reviews enabled (ri={})", base.ri);
            }
            let b = experiment::baseline_compare(&base.config())?;
            log::info!("no-info / complete ratio {:.3}", b.ratio());
            emit(&base, &[b.complete, b.no_info])
        }
        Command::RulesDump => {
            io::stdout().write_all(dump_rules().as_bytes())?;
            Ok(())
        }
        Command::Dump(base) => {
            let config = base.config();
            config.validate()?;
            let workload = WorkloadConfig {
                seed: experiment::trial_seed(config.workload.seed, 0),
                ..config.workload
            };
            base.writer()?.write_all(tpcc::dump(&tpcc::generate(&workload)).as_bytes())?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bench: {e}");
            ExitCode::FAILURE
        }
    }
}
