//! The serial transaction manager: buffer, dependency matrix, status table.
//!
//! Every operation runs to completion before the next one starts. Callers on
//! other threads go through a queue (see the service crate) and never touch
//! manager state directly.

mod events;
mod matrix;
mod sink;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

pub use events::Event;
pub use matrix::{DependencyMatrix, Entry};
pub use sink::{AcceptAll, CommitSink, SinkItem};

use crate::check::{DependencyChecker, Footprint, Reason};
use crate::model::{ModelError, Transaction, TransactionStatus, TxnId};
use crate::registry::TemplateRegistry;

use TransactionStatus::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum StrategyMode {
    /// Suspicious transactions wait in the buffer until reviewed.
    #[default]
    BufferSuspicious,
    /// Suspicious transactions commit at once; their compensations wait.
    BufferCompensating,
}

impl StrategyMode {
    pub fn as_str(self) -> &'static str {
        match self {
            StrategyMode::BufferSuspicious => "suspicious",
            StrategyMode::BufferCompensating => "compensating",
        }
    }
}

impl fmt::Display for StrategyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyMode {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "suspicious" => Ok(StrategyMode::BufferSuspicious),
            "compensating" => Ok(StrategyMode::BufferCompensating),
            _ => Err(ModelError::Parse(format!("strategy `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Accept,
    Remove,
}

impl FromStr for Verdict {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "accept" => Ok(Verdict::Accept),
            "remove" => Ok(Verdict::Remove),
            _ => Err(ModelError::Parse(format!("decision `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ManagerError {
    #[error("transaction {0} was already submitted")]
    Duplicate(TxnId),
    #[error("transaction {id} arrived with sequence {seq}, not after {last}")]
    OutOfOrder { id: TxnId, seq: u64, last: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReviewError {
    #[error("unknown transaction {0}")]
    Unknown(TxnId),
    #[error("transaction {0} is not awaiting review")]
    NotSuspicious(TxnId),
    #[error("transaction {0} is already {1}")]
    Terminal(TxnId, TransactionStatus),
    #[error("transaction {0} already has the opposite verdict")]
    Conflicting(TxnId),
}

/// Counts over the status table. `buffered_count` includes held entries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Metrics {
    pub buffered_count: u64,
    pub held_count: u64,
    pub committed_count: u64,
    pub removed_count: u64,
    pub discarded_count: u64,
    pub total_seen: u64,
}

impl Metrics {
    pub fn conserved(&self) -> bool {
        self.total_seen
            == self.buffered_count + self.committed_count + self.removed_count + self.discarded_count
    }
}

pub struct TransactionManager {
    checker: DependencyChecker,
    mode: StrategyMode,
    templates: Arc<TemplateRegistry>,
    sink: Box<dyn CommitSink>,
    matrix: DependencyMatrix,
    status: HashMap<TxnId, TransactionStatus>,
    metrics: Metrics,
    events: Vec<Event>,
    last_seq: Option<u64>,
}

impl fmt::Debug for TransactionManager {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransactionManager")
            .field("mode", &self.mode)
            .field("level", &self.checker.level)
            .field("live", &self.matrix.len())
            .field("metrics", &self.metrics)
            .finish()
    }
}

impl TransactionManager {
    pub fn new(
        checker: DependencyChecker,
        mode: StrategyMode,
        templates: Arc<TemplateRegistry>,
        sink: Box<dyn CommitSink>,
    ) -> Self {
        TransactionManager {
            checker,
            mode,
            templates,
            sink,
            matrix: DependencyMatrix::default(),
            status: HashMap::new(),
            metrics: Metrics::default(),
            events: Vec::new(),
            last_seq: None,
        }
    }

    pub fn mode(&self) -> StrategyMode {
        self.mode
    }

    pub fn checker(&self) -> &DependencyChecker {
        &self.checker
    }

    pub fn matrix(&self) -> &DependencyMatrix {
        &self.matrix
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn status_of(&self, id: &TxnId) -> Option<TransactionStatus> {
        self.status.get(id).copied()
    }

    pub fn metrics_snapshot(&self) -> Metrics {
        self.metrics
    }

    /// Suspicious entries still waiting for a verdict, in arrival order.
    pub fn reviewable(&self) -> Vec<TxnId> {
        self.matrix
            .entries()
            .filter(|e| e.reviewable())
            .map(|e| e.id().clone())
            .collect()
    }

    fn transition(
        &mut self,
        id: &TxnId,
        to: TransactionStatus,
        reason: Option<Reason>,
        note: Option<String>,
    ) {
        let from = self.status.get(id).copied().unwrap_or(Submitted);
        assert!(
            from.can_transition_to(to),
            "illegal transition {from} -> {to} for {id}"
        );
        self.status.insert(id.clone(), to);
        let m = &mut self.metrics;
        match from {
            Buffered | Held => m.buffered_count -= 1,
            _ => {}
        }
        match to {
            Buffered => m.buffered_count += 1,
            Held => {
                m.buffered_count += 1;
                m.held_count += 1;
            }
            Committed => m.committed_count += 1,
            Removed => m.removed_count += 1,
            Discarded => m.discarded_count += 1,
            Submitted => {}
        }
        if from == Held {
            m.held_count -= 1;
        }
        let event = Event {
            seq: self.events.len() as u64 + 1,
            id: id.clone(),
            from,
            to,
            reason,
            note,
        };
        log::debug!("{event}");
        self.events.push(event);
    }

    /// Live entries `txn` depends on, with the rule behind the first one.
    fn sources(&self, txn: &Transaction) -> (Vec<u64>, Option<Reason>) {
        let footprint = Footprint::of(txn);
        let mut first = None;
        let mut sources = Vec::new();
        for entry in self.matrix.entries() {
            if let Some(reason) = self.checker.depends_on(&entry.txn, txn, &footprint) {
                first.get_or_insert(reason);
                sources.push(entry.seq());
            }
        }
        (sources, first)
    }

    /// Takes in one submitted transaction and returns its new status.
    pub fn process_transaction(
        &mut self,
        txn: Transaction,
    ) -> Result<TransactionStatus, ManagerError> {
        if self.status.contains_key(&txn.id) {
            return Err(ManagerError::Duplicate(txn.id));
        }
        if let Some(last) = self.last_seq.filter(|&l| txn.arrival_seq <= l) {
            return Err(ManagerError::OutOfOrder {
                id: txn.id,
                seq: txn.arrival_seq,
                last,
            });
        }
        self.last_seq = Some(txn.arrival_seq);
        self.metrics.total_seen += 1;
        self.status.insert(txn.id.clone(), Submitted);
        let id = txn.id.clone();

        if txn.suspicious && self.mode == StrategyMode::BufferCompensating {
            return Ok(self.intake_compensating(txn));
        }
        let (sources, reason) = self.sources(&txn);
        if txn.suspicious {
            self.matrix.insert(txn, true, sources, reason);
            self.transition(&id, Buffered, reason, None);
        } else if !sources.is_empty() {
            self.matrix.insert(txn, false, sources, reason);
            self.transition(&id, Held, reason, None);
        } else {
            let outcome = self.sink.commit(SinkItem::Transaction(&txn));
            self.finish(&id, outcome, Committed);
        }
        Ok(self.status[&id])
    }

    fn intake_compensating(&mut self, txn: Transaction) -> TransactionStatus {
        let id = txn.id.clone();
        let compensation = match self.templates.compensate(&txn) {
            Ok(Some(c)) => c,
            Ok(None) => {
                log::warn!("{id} is uncompensatable, discarding");
                self.transition(&id, Discarded, None, Some("uncompensatable".into()));
                return Discarded;
            }
            Err(e) => {
                self.transition(&id, Discarded, None, Some(format!("uncompensatable: {e}")));
                return Discarded;
            }
        };
        if let Err(e) = self.sink.commit(SinkItem::Transaction(&txn)) {
            self.transition(&id, Discarded, None, Some(e));
            return Discarded;
        }
        // The compensation stands in for the transaction in the matrix.
        let stand_in = Transaction {
            actions: compensation.actions,
            ..txn
        };
        let (sources, reason) = self.sources(&stand_in);
        self.matrix.insert(stand_in, true, sources, reason);
        self.transition(&id, Buffered, reason, None);
        Buffered
    }

    fn finish(&mut self, id: &TxnId, outcome: Result<(), String>, ok: TransactionStatus) {
        match outcome {
            Ok(()) => self.transition(id, ok, None, None),
            Err(e) => {
                log::warn!("sink rejected {id}: {e}");
                self.transition(id, Discarded, None, Some(e));
            }
        }
    }

    /// Records a verdict for a buffered suspicious entry. It takes effect at
    /// the next materialization pass. Repeating the same verdict is a no-op.
    pub fn apply_review(&mut self, id: &TxnId, verdict: Verdict) -> Result<(), ReviewError> {
        let Some(entry) = self.matrix.get_mut(id) else {
            return Err(match self.status.get(id) {
                Some(&s) if s.is_terminal() => ReviewError::Terminal(id.clone(), s),
                Some(_) => ReviewError::NotSuspicious(id.clone()),
                None => ReviewError::Unknown(id.clone()),
            });
        };
        if !entry.suspicious {
            return Err(ReviewError::NotSuspicious(id.clone()));
        }
        let (same, other) = match verdict {
            Verdict::Accept => (entry.approved, entry.rejected),
            Verdict::Remove => (entry.rejected, entry.approved),
        };
        if other {
            return Err(ReviewError::Conflicting(id.clone()));
        }
        if !same {
            match verdict {
                Verdict::Accept => entry.approved = true,
                Verdict::Remove => entry.rejected = true,
            }
        }
        Ok(())
    }

    /// Commits or removes every entry that can leave the matrix, repeating
    /// until nothing changes. Returns the status changes in order.
    pub fn check_for_materialization(&mut self) -> Vec<(TxnId, TransactionStatus)> {
        let first_event = self.events.len();
        // Edges only point forward, so removing an entry can only release
        // entries later in the sweep: one ordered sweep reaches the fixed
        // point and releases in arrival order.
        let seqs: Vec<u64> = self.matrix.entries().map(Entry::seq).collect();
        for seq in seqs {
            let ready = self
                .matrix
                .by_seq(seq)
                .is_some_and(|e| e.rejected || (e.cleared() && e.indegree() == 0));
            if ready {
                self.materialize(seq);
            }
        }
        debug_assert!(self
            .matrix
            .entries()
            .all(|e| !e.rejected && !(e.cleared() && e.indegree() == 0)));
        self.events[first_event..]
            .iter()
            .map(|e| (e.id.clone(), e.to))
            .collect()
    }

    fn materialize(&mut self, seq: u64) {
        let entry = self.matrix.remove(seq).expect("entry is live");
        let id = entry.txn.id.clone();
        let compensating = entry.suspicious && self.mode == StrategyMode::BufferCompensating;
        match (entry.rejected, compensating) {
            (true, false) => self.transition(&id, Removed, None, None),
            (true, true) => {
                let comp = crate::model::CompensatingTransaction {
                    for_txn: id.clone(),
                    actions: entry.txn.actions,
                };
                let outcome = self.sink.commit(SinkItem::Compensation(&comp));
                self.finish(&id, outcome, Removed);
            }
            // Accepted: the transaction is already in the database.
            (false, true) => self.transition(&id, Committed, None, None),
            (false, false) => {
                let outcome = self.sink.commit(SinkItem::Transaction(&entry.txn));
                self.finish(&id, outcome, Committed);
            }
        }
    }
}
