//! Buffered-rate experiments: replay seeded TPC-C streams through a fresh
//! manager per trial, interleave review events, and aggregate.

use std::fmt;
use std::io;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::check::DependencyChecker;
use crate::manager::{AcceptAll, StrategyMode, TransactionManager, Verdict};
use crate::model::{CompletenessLevel, Interval, ModelError};
use crate::registry::TemplateRegistry;
use crate::tpcc::{self, WorkloadConfig, WorkloadError};

pub const CSV_HEADER: [&str; 10] = [
    "trial",
    "n",
    "si",
    "ri",
    "completeness",
    "strategy",
    "review_fraction",
    "seed",
    "buffered_count",
    "buffered_rate",
];

/// Time series cadence, in transactions.
pub const SAMPLE_EVERY: usize = 50;

const REVIEW_SALT: u64 = 0x5eed_0f2e_71e3;

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub workload: WorkloadConfig,
    pub completeness: CompletenessLevel,
    pub strategy: StrategyMode,
    pub trials: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            workload: WorkloadConfig::default(),
            completeness: CompletenessLevel::CompleteQuery,
            strategy: StrategyMode::BufferSuspicious,
            trials: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error("at least one trial is required")]
    NoTrials,
    #[error("at least one transaction is required")]
    NoTransactions,
    #[error("sweep needs at least one value")]
    NoValues,
    #[error(transparent)]
    Parse(#[from] ModelError),
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.trials == 0 {
            return Err(ExperimentError::NoTrials);
        }
        if self.workload.n_transactions == 0 {
            return Err(ExperimentError::NoTransactions);
        }
        self.workload.validate()?;
        Ok(())
    }
}

/// Seed of trial `trial` under base seed `base`.
pub fn trial_seed(base: u64, trial: usize) -> u64 {
    base.wrapping_add((trial as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub buffered_count: u64,
    pub buffered_rate: f64,
    /// `(position, buffered_count)` every [`SAMPLE_EVERY`] transactions.
    pub series: Vec<(usize, u64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub trials: Vec<TrialResult>,
}

fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl ExperimentResult {
    pub fn mean_rate(&self) -> f64 {
        mean_std(self.trials.iter().map(|t| t.buffered_rate)).0
    }

    pub fn std_rate(&self) -> f64 {
        mean_std(self.trials.iter().map(|t| t.buffered_rate)).1
    }

    pub fn mean_count(&self) -> f64 {
        mean_std(self.trials.iter().map(|t| t.buffered_count as f64)).0
    }

    pub fn std_count(&self) -> f64 {
        mean_std(self.trials.iter().map(|t| t.buffered_count as f64)).1
    }
}

/// A finished trial with its manager, for callers that keep going (e.g. to
/// review everything left in the buffer).
pub struct Replay {
    pub manager: TransactionManager,
    pub result: TrialResult,
    pub rng: ChaCha8Rng,
}

/// Runs one trial.
pub fn replay(config: &ExperimentConfig, trial: usize, templates: &Arc<TemplateRegistry>) -> Replay {
    let seed = trial_seed(config.workload.seed, trial);
    let workload = WorkloadConfig {
        seed,
        ..config.workload.clone()
    };
    let stream = tpcc::generate_with(&workload, templates);
    let mut manager = TransactionManager::new(
        DependencyChecker::new(tpcc::invariants(), config.completeness),
        config.strategy,
        Arc::clone(templates),
        Box::new(AcceptAll::default()),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ REVIEW_SALT);
    let mut reviews = tpcc::review_schedule(&workload).into_iter().peekable();
    let mut series = Vec::new();
    for (i, txn) in stream.into_iter().enumerate() {
        let position = i + 1;
        manager.check_for_materialization();
        manager
            .process_transaction(txn)
            .expect("generated ids and sequences are unique and increasing");
        if let Some(event) = reviews.next_if(|e| e.position == position) {
            let reviewable = manager.reviewable();
            for id in tpcc::sample_reviews(&reviewable, event.fraction, &mut rng) {
                let verdict = if rng.gen_bool(workload.accept_share) {
                    Verdict::Accept
                } else {
                    Verdict::Remove
                };
                manager
                    .apply_review(&id, verdict)
                    .expect("sampled entries are reviewable");
            }
            manager.check_for_materialization();
        }
        if position % SAMPLE_EVERY == 0 {
            series.push((position, manager.metrics_snapshot().buffered_count));
        }
    }
    manager.check_for_materialization();
    let buffered_count = manager.metrics_snapshot().buffered_count;
    Replay {
        manager,
        result: TrialResult {
            trial,
            seed,
            buffered_count,
            buffered_rate: buffered_count as f64 / workload.n_transactions as f64,
            series,
        },
        rng,
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult, ExperimentError> {
    config.validate()?;
    let templates = Arc::new(tpcc::registry());
    let trials = (0..config.trials)
        .into_par_iter()
        .map(|t| replay(config, t, &templates).result)
        .collect();
    Ok(ExperimentResult {
        config: config.clone(),
        trials,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Si,
    Ri,
    N,
    Completeness,
}

impl FromStr for Axis {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "si" => Ok(Axis::Si),
            "ri" => Ok(Axis::Ri),
            "n" => Ok(Axis::N),
            "completeness" => Ok(Axis::Completeness),
            _ => Err(ModelError::Parse(format!("axis `{s}`"))),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Si => "si",
            Axis::Ri => "ri",
            Axis::N => "n",
            Axis::Completeness => "completeness",
        })
    }
}

/// Applies one sweep value to a copy of `base`.
pub fn with_axis(base: &ExperimentConfig, axis: Axis, value: &str) -> Result<ExperimentConfig, ExperimentError> {
    let mut c = base.clone();
    match axis {
        Axis::Si => c.workload.si = value.parse()?,
        Axis::Ri => c.workload.ri = value.parse()?,
        Axis::N => {
            c.workload.n_transactions = value
                .parse()
                .map_err(|_| ModelError::Parse(format!("transaction count `{value}`")))?
        }
        Axis::Completeness => c.completeness = value.parse()?,
    }
    c.validate()?;
    Ok(c)
}

pub fn run_sweep<S: AsRef<str>>(
    axis: Axis,
    values: &[S],
    base: &ExperimentConfig,
) -> Result<Vec<ExperimentResult>, ExperimentError> {
    if values.is_empty() {
        return Err(ExperimentError::NoValues);
    }
    let configs = values
        .iter()
        .map(|v| with_axis(base, axis, v.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    configs.iter().map(run_experiment).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineComparison {
    pub complete: ExperimentResult,
    pub no_info: ExperimentResult,
}

impl BaselineComparison {
    /// `rate(no info) / rate(complete)`; infinite when nothing was buffered
    /// with complete information but something was without.
    pub fn ratio(&self) -> f64 {
        let (c, n) = (self.complete.mean_rate(), self.no_info.mean_rate());
        if c == 0.0 && n == 0.0 {
            1.0
        } else {
            n / c
        }
    }
}

/// Runs the same seeded workloads with complete information and with none.
pub fn baseline_compare(base: &ExperimentConfig) -> Result<BaselineComparison, ExperimentError> {
    let at = |completeness| {
        run_experiment(&ExperimentConfig {
            completeness,
            ..base.clone()
        })
    };
    Ok(BaselineComparison {
        complete: at(CompletenessLevel::CompleteQuery)?,
        no_info: at(CompletenessLevel::NoInvariantInfo)?,
    })
}

fn interval(i: Interval) -> String {
    i.to_string()
}

/// Writes one CSV row per trial under [`CSV_HEADER`].
pub fn write_csv<W: io::Write>(results: &[ExperimentResult], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in results {
        let c = &r.config;
        for t in &r.trials {
            w.write_record([
                t.trial.to_string(),
                c.workload.n_transactions.to_string(),
                interval(c.workload.si),
                interval(c.workload.ri),
                c.completeness.to_string(),
                c.strategy.to_string(),
                c.workload.review_fraction.to_string(),
                t.seed.to_string(),
                t.buffered_count.to_string(),
                format!("{:.6}", t.buffered_rate),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(results: &[ExperimentResult]) -> String {
    let mut buf = Vec::new();
    write_csv(results, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is utf-8")
}
