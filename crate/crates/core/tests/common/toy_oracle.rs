//! Brute-force merge oracle over a toy numeric store: one table, two columns,
//! three rows, values 0..=5.
//!
//! A later transaction depends on an earlier one when some valid state lets
//! each of them commit alone while applying both breaks the bound.
#![allow(dead_code)]

use isat_core::model::{ActionKind, Ident, Params, TxnId};
use isat_core::{
    pair_depends, ActionDescriptor, Attachment, CompletenessLevel, InvariantDecl, InvariantKind,
    Transaction,
};

const ROWS: [&str; 3] = ["1", "2", "3"];
const COLUMNS: [&str; 2] = ["balance", "other"];
const VALUES: std::ops::RangeInclusive<i64> = 0..=5;

/// `(kind, column, row, amount)`
pub type ToyAction = (ActionKind, usize, usize, i64);

fn toy_actions() -> Vec<ToyAction> {
    let mut out = Vec::new();
    for kind in [ActionKind::Increment, ActionKind::Decrement, ActionKind::Read] {
        for c in 0..COLUMNS.len() {
            for r in 0..ROWS.len() {
                for amount in [1, 2] {
                    out.push((kind, c, r, amount));
                }
            }
        }
    }
    out
}

fn bound_ok(kind: InvariantKind, v: i64) -> bool {
    match kind {
        InvariantKind::CheckMore | InvariantKind::CounterMore => v >= 1,
        InvariantKind::CheckLess | InvariantKind::CounterLess => v <= 4,
        _ => unreachable!(),
    }
}

type State = [[i64; 3]; 2];

fn apply(state: &mut State, a: ToyAction) {
    let (kind, c, r, amount) = a;
    match kind {
        ActionKind::Increment => state[c][r] += amount,
        ActionKind::Decrement => state[c][r] -= amount,
        _ => {}
    }
}

fn valid(kind: InvariantKind, state: &State) -> bool {
    // the invariant is attached to the balance column only
    state[0].iter().all(|&v| bound_ok(kind, v))
}

fn all_states() -> Vec<State> {
    let mut out = Vec::new();
    let cells = 6;
    let base = (*VALUES.end() - *VALUES.start() + 1) as usize;
    for mut code in 0..base.pow(cells) {
        let mut s = [[0; 3]; 2];
        for cell in 0..cells as usize {
            s[cell / 3][cell % 3] = VALUES.start() + (code % base) as i64;
            code /= base;
        }
        out.push(s);
    }
    out
}

fn oracle(kind: InvariantKind, states: &[State], a1: ToyAction, a2: ToyAction) -> bool {
    states.iter().filter(|s| valid(kind, s)).any(|s| {
        let (mut one, mut two, mut both) = (*s, *s, *s);
        apply(&mut one, a1);
        apply(&mut two, a2);
        apply(&mut both, a1);
        apply(&mut both, a2);
        valid(kind, &one) && valid(kind, &two) && !valid(kind, &both)
    })
}

pub fn txn(id: &str, seq: u64, a: ToyAction, row: Ident) -> Transaction {
    Transaction {
        id: TxnId::from(id),
        template: "toy".into(),
        params: Params::new(),
        actions: vec![ActionDescriptor::new(a.0, "accounts", COLUMNS[a.1], row)],
        suspicious: false,
        arrival_seq: seq,
    }
}

pub const BOUNDED: [InvariantKind; 4] = [
    InvariantKind::CheckMore,
    InvariantKind::CheckLess,
    InvariantKind::CounterMore,
    InvariantKind::CounterLess,
];

#[derive(Debug, Default)]
pub struct OracleReport {
    pub cases: usize,
    pub dependent: usize,
    pub mismatches: Vec<String>,
}

/// Every ordered pair of toy actions for every bounded kind, checked at
/// complete information against the oracle.
pub fn exhaustive_complete() -> OracleReport {
    let states = all_states();
    let actions = toy_actions();
    let mut report = OracleReport::default();
    for kind in BOUNDED {
        let invs = [InvariantDecl::new(kind, Attachment::column("accounts", "balance"))];
        for &a1 in &actions {
            for &a2 in &actions {
                let t1 = txn("t1", 1, a1, ROWS[a1.2].into());
                let t2 = txn("t2", 2, a2, ROWS[a2.2].into());
                let verdict = pair_depends(&t1, &t2, &invs, CompletenessLevel::CompleteQuery);
                let expected = oracle(kind, &states, a1, a2);
                if verdict.depends != expected {
                    report.mismatches.push(format!(
                        "{kind}: {a1:?} then {a2:?}: checker {} ({}), oracle {expected}",
                        verdict.depends, verdict.explanation
                    ));
                }
                report.cases += 1;
                report.dependent += expected as usize;
            }
        }
    }
    report
}

/// With the earlier transaction's row unbound, the checker must depend exactly
/// when some binding of that row lets the oracle find a violation.
pub fn exhaustive_partial() -> OracleReport {
    let states = all_states();
    let actions = toy_actions();
    let mut report = OracleReport::default();
    for kind in BOUNDED {
        let invs = [InvariantDecl::new(kind, Attachment::column("accounts", "balance"))];
        for &a1 in actions.iter().filter(|a| a.2 == 0) {
            for &a2 in &actions {
                let t1 = txn("t1", 1, a1, Ident::Unknown);
                let t2 = txn("t2", 2, a2, ROWS[a2.2].into());
                let verdict = pair_depends(&t1, &t2, &invs, CompletenessLevel::PartialQuery);
                let expected =
                    (0..ROWS.len()).any(|r| oracle(kind, &states, (a1.0, a1.1, r, a1.3), a2));
                if verdict.depends != expected {
                    report.mismatches.push(format!("{kind}: {a1:?}@? then {a2:?}"));
                }
                report.cases += 1;
                report.dependent += expected as usize;
            }
        }
    }
    report
}
