#[path = "common/suites.rs"]
mod suites;

use std::sync::Arc;

use proptest::test_runner::TestRunner;

use isat_core::check::DependencyChecker;
use isat_core::experiment::ExperimentConfig;
use isat_core::manager::{AcceptAll, StrategyMode, TransactionManager};
use isat_core::tpcc::{self, WorkloadConfig};
use isat_core::{CompletenessLevel, Interval};

#[test]
fn completeness_is_monotone() {
    let mut runner = TestRunner::new(proptest::test_runner::Config::with_cases(10_000));
    suites::completeness_monotonicity(&mut runner).unwrap();
}

#[test]
fn manager_fuzz() {
    let mut runner = TestRunner::new(proptest::test_runner::Config::with_cases(24));
    suites::manager_fuzz(&mut runner, 1000).unwrap();
}

fn replay_counts(level: CompletenessLevel, seed: u64) -> Vec<u64> {
    let templates = Arc::new(tpcc::registry());
    let workload = WorkloadConfig {
        n_transactions: 400,
        seed,
        ..WorkloadConfig::default()
    };
    let mut m = TransactionManager::new(
        DependencyChecker::new(tpcc::invariants(), level),
        StrategyMode::BufferSuspicious,
        Arc::clone(&templates),
        Box::new(AcceptAll::default()),
    );
    tpcc::generate_with(&workload, &templates)
        .into_iter()
        .map(|t| {
            m.check_for_materialization();
            m.process_transaction(t).unwrap();
            m.metrics_snapshot().buffered_count
        })
        .collect()
}

#[test]
fn coarser_levels_never_buffer_less() {
    for seed in 0..6 {
        let complete = replay_counts(CompletenessLevel::CompleteQuery, seed);
        let partial = replay_counts(CompletenessLevel::PartialQuery, seed);
        let none = replay_counts(CompletenessLevel::NoInvariantInfo, seed);
        for step in 0..complete.len() {
            assert!(complete[step] <= partial[step], "seed {seed} step {step}");
            assert!(partial[step] <= none[step], "seed {seed} step {step}");
        }
    }
}

#[test]
fn identical_inputs_identical_histories() {
    let run = || {
        let templates = Arc::new(tpcc::registry());
        let workload = WorkloadConfig {
            n_transactions: 300,
            ri: Interval::Every(25),
            ..WorkloadConfig::default()
        };
        let config = ExperimentConfig {
            workload,
            trials: 1,
            ..ExperimentConfig::default()
        };
        let r = isat_core::experiment::replay(&config, 0, &templates);
        r.manager
            .events()
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

#[test]
fn seeded_csv_is_byte_identical() {
    let (a, b) = suites::csv_twice();
    assert_eq!(a.as_bytes(), b.as_bytes());
}
