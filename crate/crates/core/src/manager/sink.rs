//! Where materialized work goes. The manager never executes actions itself.

use crate::model::{CompensatingTransaction, Transaction};

/// One physical commit request.
#[derive(Clone, Copy, Debug)]
pub enum SinkItem<'a> {
    Transaction(&'a Transaction),
    Compensation(&'a CompensatingTransaction),
}

/// Receives committed work and reports whether physical constraint
/// validation accepted it.
pub trait CommitSink: Send {
    fn commit(&mut self, item: SinkItem<'_>) -> Result<(), String>;
}

impl<F> CommitSink for F
where
    F: FnMut(SinkItem<'_>) -> Result<(), String> + Send,
{
    fn commit(&mut self, item: SinkItem<'_>) -> Result<(), String> {
        self(item)
    }
}

/// Accepts everything immediately and counts calls.
#[derive(Clone, Debug, Default)]
pub struct AcceptAll {
    pub calls: u64,
}

impl CommitSink for AcceptAll {
    fn commit(&mut self, _item: SinkItem<'_>) -> Result<(), String> {
        self.calls += 1;
        Ok(())
    }
}
