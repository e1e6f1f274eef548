//! The rule matrix: for each invariant kind, which pairs of actions can break
//! invariant satisfaction, and how wide the match must be at each level of
//! query and invariant completeness.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{ActionKind, CompletenessLevel, InvariantKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MatchScope {
    SameField,
    SameRow,
    SameColumn,
    SameTable,
    ReferencesDeletedRow,
    ReferencesAnyKeyInReferencedTable,
    ChildOfDeletedRow,
    SameReferenceColumn,
    ConstrainedByRow,
    ConstrainedByAnyRowInTable,
    SameTableDifferentUsers,
    CorrespondsToSpecificInsert,
    CorrespondsToAnyInsertInTable,
    AlwaysWait,
}

impl fmt::Display for MatchScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

use ActionKind::*;
use CompletenessLevel::*;
use MatchScope::*;

fn insert_or_update(kind: ActionKind) -> bool {
    matches!(kind, Insert | Update)
}

/// Picks the cell for `level` out of a `(complete, partial, none)` triple.
fn by_level(
    level: CompletenessLevel,
    complete: MatchScope,
    partial: MatchScope,
    none: MatchScope,
) -> MatchScope {
    match level {
        CompleteQuery => complete,
        PartialQuery => partial,
        NoInvariantInfo => none,
    }
}

/// Returns the rule cell for `(kind, first, second)` at `level`, or `None` when
/// the action pair is not listed for that invariant.
///
/// Reads are never listed. The "more than" check and counter rows use
/// decrements in every column.
pub fn rule_lookup(
    kind: InvariantKind,
    first: ActionKind,
    second: ActionKind,
    level: CompletenessLevel,
) -> Option<MatchScope> {
    if first == Read || second == Read {
        return None;
    }
    let scope = match kind {
        InvariantKind::Uniqueness if insert_or_update(first) && insert_or_update(second) => {
            by_level(level, SameColumn, SameTable, SameTable)
        }
        InvariantKind::ForeignKey if first == Delete && second == Insert => by_level(
            level,
            ReferencesDeletedRow,
            ReferencesAnyKeyInReferencedTable,
            ReferencesAnyKeyInReferencedTable,
        ),
        InvariantKind::AutoIncrement if first == Insert && second == Insert => SameTable,
        InvariantKind::CheckLess | InvariantKind::CounterLess
            if first == Increment && second == Increment =>
        {
            by_level(level, SameField, SameColumn, SameTable)
        }
        InvariantKind::CheckMore | InvariantKind::CounterMore
            if first == Decrement && second == Decrement =>
        {
            by_level(level, SameField, SameColumn, SameTable)
        }
        InvariantKind::CollectionSize if first == Mutate && second == Mutate => SameTable,
        InvariantKind::TreeParent if first == Delete && second == Insert => {
            by_level(level, ChildOfDeletedRow, SameTable, SameTable)
        }
        InvariantKind::GraphAcyclic if first == Insert && second == Insert => {
            by_level(level, SameReferenceColumn, SameReferenceColumn, SameTable)
        }
        InvariantKind::SequentialOrder if insert_or_update(first) && insert_or_update(second) => {
            by_level(level, SameRow, SameTable, SameTable)
        }
        InvariantKind::ConditionalValue if insert_or_update(first) && insert_or_update(second) => {
            by_level(
                level,
                ConstrainedByRow,
                ConstrainedByAnyRowInTable,
                ConstrainedByAnyRowInTable,
            )
        }
        InvariantKind::SessionConsistency => SameTableDifferentUsers,
        InvariantKind::SequenceRequirement if first == Insert && second == Insert => by_level(
            level,
            CorrespondsToSpecificInsert,
            CorrespondsToAnyInsertInTable,
            CorrespondsToAnyInsertInTable,
        ),
        InvariantKind::GroupedActions if first == Insert && second == Insert => AlwaysWait,
        InvariantKind::BranchingLogic if first == Update && second == Update => AlwaysWait,
        _ => return None,
    };
    Some(scope)
}

/// One populated cell of the rule matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct RuleEntry {
    pub kind: InvariantKind,
    pub first: ActionKind,
    pub second: ActionKind,
    pub level: CompletenessLevel,
    pub scope: MatchScope,
}

impl fmt::Display for RuleEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {} -> {}",
            self.kind, self.first, self.second, self.level, self.scope
        )
    }
}

/// Every populated cell, in taxonomy order, then by action pair, then from the
/// most to the least informed level.
pub fn rule_table() -> Vec<RuleEntry> {
    let mut out = Vec::new();
    for kind in InvariantKind::ALL {
        for first in ActionKind::ALL {
            for second in ActionKind::ALL {
                for level in CompletenessLevel::ALL {
                    if let Some(scope) = rule_lookup(kind, first, second, level) {
                        out.push(RuleEntry {
                            kind,
                            first,
                            second,
                            level,
                            scope,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Renders the rule table, one line per cell.
pub fn dump_rules() -> String {
    let mut out = String::new();
    for entry in rule_table() {
        out.push_str(&entry.to_string());
        out.push('\n');
    }
    out
}
