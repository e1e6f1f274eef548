//! The dependency matrix over live buffered and held transactions.
//!
//! Entries are keyed by arrival sequence, so iteration order is insertion
//! order. The relation is stored as forward and backward adjacency sets; a
//! removed entry takes its row and column with it.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::check::Reason;
use crate::model::{Transaction, TxnId};

#[derive(Clone, Debug)]
pub struct Entry {
    /// What later transactions are checked against: the transaction itself,
    /// or its compensation in compensating mode.
    pub txn: Transaction,
    pub suspicious: bool,
    pub approved: bool,
    pub rejected: bool,
    /// Rule behind the first incoming edge, for the event log.
    pub held_by: Option<Reason>,
    dependents: BTreeSet<u64>,
    depends_on: BTreeSet<u64>,
}

impl Entry {
    pub fn seq(&self) -> u64 {
        self.txn.arrival_seq
    }

    pub fn id(&self) -> &TxnId {
        &self.txn.id
    }

    pub fn indegree(&self) -> usize {
        self.depends_on.len()
    }

    /// Approved or never needed review.
    pub fn cleared(&self) -> bool {
        self.approved || !self.suspicious
    }

    pub fn reviewable(&self) -> bool {
        self.suspicious && !self.approved && !self.rejected
    }
}

#[derive(Clone, Debug, Default)]
pub struct DependencyMatrix {
    entries: BTreeMap<u64, Entry>,
    index: HashMap<TxnId, u64>,
}

impl DependencyMatrix {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &Entry> {
        self.entries.values()
    }

    pub fn get(&self, id: &TxnId) -> Option<&Entry> {
        self.index.get(id).and_then(|s| self.entries.get(s))
    }

    pub(crate) fn get_mut(&mut self, id: &TxnId) -> Option<&mut Entry> {
        let seq = self.index.get(id)?;
        self.entries.get_mut(seq)
    }

    pub(crate) fn by_seq(&self, seq: u64) -> Option<&Entry> {
        self.entries.get(&seq)
    }

    pub fn contains(&self, id: &TxnId) -> bool {
        self.index.contains_key(id)
    }

    /// Whether `later` depends on `earlier`.
    pub fn depends(&self, earlier: &TxnId, later: &TxnId) -> bool {
        match (self.index.get(earlier), self.index.get(later)) {
            (Some(e), Some(l)) => self.entries[e].dependents.contains(l),
            _ => false,
        }
    }

    /// Every edge as `(earlier, later)`, in insertion order of `earlier`.
    pub fn edges(&self) -> Vec<(TxnId, TxnId)> {
        let mut out = Vec::new();
        for e in self.entries.values() {
            for d in &e.dependents {
                out.push((e.id().clone(), self.entries[d].id().clone()));
            }
        }
        out
    }

    /// Inserts a new entry whose incoming edges come from `sources`, each a
    /// live entry that arrived earlier.
    pub(crate) fn insert(
        &mut self,
        txn: Transaction,
        suspicious: bool,
        sources: Vec<u64>,
        held_by: Option<Reason>,
    ) {
        let seq = txn.arrival_seq;
        debug_assert!(self.entries.keys().next_back().is_none_or(|&last| last < seq));
        for s in &sources {
            self.entries
                .get_mut(s)
                .expect("dependency source must be live")
                .dependents
                .insert(seq);
        }
        self.index.insert(txn.id.clone(), seq);
        self.entries.insert(
            seq,
            Entry {
                txn,
                suspicious,
                approved: false,
                rejected: false,
                held_by,
                dependents: BTreeSet::new(),
                depends_on: sources.into_iter().collect(),
            },
        );
    }

    /// Removes an entry, clearing its row and column.
    pub(crate) fn remove(&mut self, seq: u64) -> Option<Entry> {
        let entry = self.entries.remove(&seq)?;
        self.index.remove(entry.id());
        for d in &entry.dependents {
            if let Some(e) = self.entries.get_mut(d) {
                e.depends_on.remove(&seq);
            }
        }
        for s in &entry.depends_on {
            if let Some(e) = self.entries.get_mut(s) {
                e.dependents.remove(&seq);
            }
        }
        Some(entry)
    }

    /// Checks the structural invariants: edges point forward in arrival order,
    /// no self edges, and both adjacency directions agree.
    pub fn validate(&self) -> Result<(), String> {
        if self.index.len() != self.entries.len() {
            return Err("index out of sync".into());
        }
        for (&seq, e) in &self.entries {
            if self.index.get(e.id()) != Some(&seq) {
                return Err(format!("{} indexed at the wrong sequence", e.id()));
            }
            for &d in &e.dependents {
                if d <= seq {
                    return Err(format!("edge {seq} -> {d} points backwards"));
                }
                match self.entries.get(&d) {
                    Some(t) if t.depends_on.contains(&seq) => {}
                    _ => return Err(format!("edge {seq} -> {d} missing its reverse")),
                }
            }
            for &s in &e.depends_on {
                match self.entries.get(&s) {
                    Some(t) if t.dependents.contains(&seq) => {}
                    _ => return Err(format!("edge {s} -> {seq} missing its forward")),
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Params;

    fn txn(id: &str, seq: u64) -> Transaction {
        Transaction {
            id: id.into(),
            template: "t".into(),
            params: Params::new(),
            actions: Vec::new(),
            suspicious: false,
            arrival_seq: seq,
        }
    }

    #[test]
    fn removal_clears_row_and_column() {
        let mut m = DependencyMatrix::default();
        m.insert(txn("a", 1), true, vec![], None);
        m.insert(txn("b", 2), false, vec![1], None);
        m.insert(txn("c", 3), false, vec![1, 2], None);
        assert!(m.depends(&"a".into(), &"c".into()));
        assert_eq!(m.get(&"c".into()).unwrap().indegree(), 2);
        m.remove(2);
        assert_eq!(m.get(&"c".into()).unwrap().indegree(), 1);
        assert_eq!(m.edges(), vec![("a".into(), "c".into())]);
        m.validate().unwrap();
        m.remove(1);
        assert_eq!(m.get(&"c".into()).unwrap().indegree(), 0);
        assert!(m.edges().is_empty());
        assert_eq!(m.len(), 1);
    }
}
