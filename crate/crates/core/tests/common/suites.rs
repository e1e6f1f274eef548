//! Randomized suites shared by the property tests and the acceptance run.
#![allow(dead_code)]

use std::sync::Arc;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use isat_core::check::DependencyChecker;
use isat_core::experiment::{csv_string, run_experiment, ExperimentConfig};
use isat_core::manager::{AcceptAll, StrategyMode, TransactionManager, Verdict};
use isat_core::model::{ActionKind, Link, Params, TxnId};
use isat_core::tpcc::{self, WorkloadConfig};
use isat_core::{
    pair_depends, ActionDescriptor, Attachment, CompletenessLevel, Ident, InvariantDecl,
    InvariantKind, InvariantParams, Interval, Transaction, TransactionStatus,
};

/// A runner with a fixed seed, so a reported failure reproduces.
pub fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

const TABLES: [&str; 3] = ["a", "b", "c"];

fn ident(values: &'static [&'static str]) -> impl Strategy<Value = Ident> {
    prop_oneof![
        3 => proptest::sample::select(values).prop_map(Ident::from),
        1 => Just(Ident::Unknown),
    ]
}

fn table() -> impl Strategy<Value = String> {
    proptest::sample::select(&TABLES[..]).prop_map(String::from)
}

fn link() -> impl Strategy<Value = Link> {
    (
        proptest::option::of((table(), ident(&["1", "2"]))),
        proptest::option::of(ident(&["1", "2"])),
        proptest::option::of(ident(&["u1", "u2"])),
        proptest::option::of(ident(&["g1", "g2"])),
        proptest::option::of(ident(&["t1", "t9"])),
    )
        .prop_map(|(references, parent, session, group, condition_source)| Link {
            references,
            parent,
            edge: None,
            session,
            group,
            condition_source,
        })
}

fn descriptor() -> impl Strategy<Value = ActionDescriptor> {
    (
        proptest::sample::select(&ActionKind::ALL[..]),
        table(),
        ident(&["x", "y"]),
        ident(&["1", "2"]),
        link(),
    )
        .prop_map(|(kind, table, column, row, link)| {
            ActionDescriptor::new(kind, table, column, row).with_link(link)
        })
}

fn invariant() -> impl Strategy<Value = InvariantDecl> {
    (
        proptest::sample::select(&InvariantKind::ALL[..]),
        table(),
        proptest::option::of(proptest::sample::select(&["x", "y"][..])),
        proptest::option::of(proptest::sample::select(&["1", "2"][..])),
        table(),
    )
        .prop_map(|(kind, t, column, row, partner)| {
            let mut scope = match column {
                Some(c) => Attachment::column(t, c),
                None => Attachment::table(t),
            };
            if let Some(r) = row {
                scope = scope.with_rows([r]);
            }
            let params = match kind {
                InvariantKind::ForeignKey => InvariantParams::ForeignKey { referencing: partner },
                InvariantKind::ConditionalValue => {
                    InvariantParams::ConditionalValue { constrained: partner }
                }
                InvariantKind::SequenceRequirement => {
                    InvariantParams::SequenceRequirement { successor: partner }
                }
                InvariantKind::GroupedActions => InvariantParams::GroupedActions { partner },
                InvariantKind::SequentialOrder => InvariantParams::SequentialOrder {
                    first: "x".into(),
                    second: "y".into(),
                },
                _ => InvariantParams::None,
            };
            InvariantDecl::new(kind, scope).with_params(params)
        })
}

fn txn(id: &str, seq: u64, actions: Vec<ActionDescriptor>) -> Transaction {
    Transaction {
        id: TxnId::from(id),
        template: "t".into(),
        params: Params::new(),
        actions,
        suspicious: false,
        arrival_seq: seq,
    }
}

type Pair = (Vec<ActionDescriptor>, Vec<ActionDescriptor>, Vec<InvariantDecl>);

fn pair() -> impl Strategy<Value = Pair> {
    (
        proptest::collection::vec(descriptor(), 1..4),
        proptest::collection::vec(descriptor(), 1..4),
        proptest::collection::vec(invariant(), 0..4),
    )
}

fn monotone_case((a, b, invs): Pair) -> Result<(), TestCaseError> {
    let t1 = txn("t1", 1, a);
    let t2 = txn("t2", 2, b);
    let at = |level| pair_depends(&t1, &t2, &invs, level);
    let complete = at(CompletenessLevel::CompleteQuery);
    let partial = at(CompletenessLevel::PartialQuery);
    let none = at(CompletenessLevel::NoInvariantInfo);
    prop_assert!(!complete.depends || partial.depends, "complete {} / partial {}", complete.explanation, partial.explanation);
    prop_assert!(!partial.depends || none.depends, "partial {} / none {}", partial.explanation, none.explanation);
    for v in [&complete, &partial, &none] {
        prop_assert_eq!(v.depends, v.matched_rule.is_some());
    }
    // same inputs, same verdict
    prop_assert_eq!(at(CompletenessLevel::PartialQuery), partial);
    Ok(())
}

/// Coarser information never removes a dependency.
pub fn completeness_monotonicity(runner: &mut TestRunner) -> Result<(), String> {
    runner.run(&pair(), monotone_case).map_err(|e| e.to_string())
}

#[derive(Clone, Debug)]
enum Op {
    Intake { suspicious: bool },
    Review { pick: usize, accept: bool },
    ReviewStale { pick: usize },
    Materialize,
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        6 => any::<bool>().prop_map(|s| Op::Intake { suspicious: s }),
        3 => (any::<usize>(), any::<bool>()).prop_map(|(pick, accept)| Op::Review { pick, accept }),
        1 => any::<usize>().prop_map(|pick| Op::ReviewStale { pick }),
        2 => Just(Op::Materialize),
    ]
}

fn level() -> impl Strategy<Value = CompletenessLevel> {
    proptest::sample::select(&CompletenessLevel::ALL[..])
}

fn check_manager(m: &TransactionManager, after_pass: bool) -> Result<(), TestCaseError> {
    m.matrix().validate().map_err(TestCaseError::fail)?;
    let metrics = m.metrics_snapshot();
    prop_assert!(metrics.conserved(), "{metrics:?}");
    prop_assert_eq!(metrics.buffered_count as usize, m.matrix().len());
    if after_pass {
        for e in m.matrix().entries() {
            prop_assert!(!e.rejected, "rejected entries never outlive a pass");
            prop_assert!(!(e.cleared() && e.indegree() == 0), "{} should have left", e.id());
        }
    }
    Ok(())
}

type FuzzCase = (u64, CompletenessLevel, bool, Vec<Op>);

fn fuzz_case(steps: usize) -> impl Strategy<Value = FuzzCase> {
    (any::<u64>(), level(), any::<bool>(), proptest::collection::vec(op(), steps))
}

fn fuzz_run((seed, level, compensating, ops): FuzzCase) -> Result<(), TestCaseError> {
    let templates = Arc::new(tpcc::registry());
    let workload = WorkloadConfig {
        n_transactions: ops.len(),
        si: Interval::Infinite,
        districts: 2,
        customers: 10,
        items: 50,
        seed,
        ..WorkloadConfig::default()
    };
    let mut stream = tpcc::generate_with(&workload, &templates).into_iter();
    let mode = if compensating { StrategyMode::BufferCompensating } else { StrategyMode::BufferSuspicious };
    let mut m = TransactionManager::new(
        DependencyChecker::new(tpcc::invariants(), level),
        mode,
        Arc::clone(&templates),
        Box::new(AcceptAll::default()),
    );
    let mut seen: Vec<TxnId> = Vec::new();
    for op in ops {
        let after_pass = matches!(op, Op::Materialize);
        match op {
            Op::Intake { suspicious } => {
                let mut t = stream.next().unwrap();
                t.suspicious = suspicious;
                seen.push(t.id.clone());
                m.process_transaction(t).unwrap();
            }
            Op::Review { pick, accept } => {
                let reviewable = m.reviewable();
                if !reviewable.is_empty() {
                    let id = &reviewable[pick % reviewable.len()];
                    let v = if accept { Verdict::Accept } else { Verdict::Remove };
                    m.apply_review(id, v).unwrap();
                }
            }
            Op::ReviewStale { pick } => {
                if !seen.is_empty() {
                    let id = &seen[pick % seen.len()];
                    let before = m.status_of(id);
                    if m.apply_review(id, Verdict::Accept).is_err() {
                        prop_assert_eq!(m.status_of(id), before);
                    }
                }
            }
            Op::Materialize => {
                m.check_for_materialization();
            }
        }
        check_manager(&m, after_pass)?;
    }
    for e in m.events() {
        prop_assert!(e.from.can_transition_to(e.to), "{e}");
    }
    // with an accepting sink nothing is ever discarded
    prop_assert_eq!(m.metrics_snapshot().discarded_count, 0);

    // drain: any mix of verdicts empties the matrix
    for (i, id) in m.reviewable().into_iter().enumerate() {
        let v = if i % 3 == 0 { Verdict::Accept } else { Verdict::Remove };
        m.apply_review(&id, v).unwrap();
    }
    m.check_for_materialization();
    check_manager(&m, true)?;
    prop_assert!(m.matrix().is_empty());
    prop_assert_eq!(m.metrics_snapshot().buffered_count, 0);
    for id in &seen {
        prop_assert!(m.status_of(id).is_some_and(TransactionStatus::is_terminal));
    }
    Ok(())
}

/// Random intake, review and materialization sequences of `steps` operations,
/// checking the matrix and the metrics after every one.
pub fn manager_fuzz(runner: &mut TestRunner, steps: usize) -> Result<(), String> {
    runner.run(&fuzz_case(steps), fuzz_run).map_err(|e| e.to_string())
}

/// Two runs of one seeded configuration, returned as CSV text.
pub fn csv_twice() -> (String, String) {
    let config = ExperimentConfig {
        workload: WorkloadConfig {
            n_transactions: 300,
            ri: Interval::Every(50),
            seed: 9,
            ..WorkloadConfig::default()
        },
        trials: 4,
        ..ExperimentConfig::default()
    };
    let a = csv_string(&[run_experiment(&config).unwrap()]);
    let b = csv_string(&[run_experiment(&config).unwrap()]);
    (a, b)
}
