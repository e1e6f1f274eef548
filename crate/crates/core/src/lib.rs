//! Consistency-preserving buffering for removable transactions.
//!
//! [`check`] decides whether a new transaction must wait for a buffered one,
//! [`manager`] owns the buffer and dependency matrix, [`tpcc`] generates the
//! benchmark workload and [`experiment`] measures buffered rates over it.

pub mod check;
pub mod experiment;
pub mod manager;
pub mod model;
pub mod registry;
pub mod tpcc;

pub use check::{pair_depends, DependencyChecker, DependencyVerdict, MatchScope, PairPolicy};
pub use manager::{StrategyMode, TransactionManager};
pub use model::{
    ActionDescriptor, ActionKind, Attachment, CompletenessLevel, Ident, InvariantDecl,
    InvariantKind, InvariantParams, Interval, Params, Transaction, TransactionStatus, TxnId,
};
pub use registry::TemplateRegistry;
