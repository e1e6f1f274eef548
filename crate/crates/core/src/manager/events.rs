use std::fmt;

use crate::check::Reason;
use crate::model::{TransactionStatus, TxnId};

/// One status transition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event {
    pub seq: u64,
    pub id: TxnId,
    pub from: TransactionStatus,
    pub to: TransactionStatus,
    /// Rule that held the transaction, for transitions into `Held`.
    pub reason: Option<Reason>,
    pub note: Option<String>,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}->{}", self.seq, self.id, self.from, self.to)?;
        if let Some(r) = &self.reason {
            write!(f, " rule={r}")?;
        }
        if let Some(n) = &self.note {
            write!(f, " ({n})")?;
        }
        Ok(())
    }
}
