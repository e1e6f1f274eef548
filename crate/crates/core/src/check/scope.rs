//! Deciding whether two concrete actions fall inside a rule's match scope.
//!
//! An invariant is either attached (its table, columns, rows and kind
//! parameters are known) or unattached, when the checker only assumes an
//! invariant of that kind may exist somewhere. Unattached matching is the
//! union of attached matching over every possible attachment. Unbound row,
//! column and link fields always match.
//!
//! Relationships that cross rows or tables (references, groups, branching)
//! are only visible through the later action's link metadata, so an action
//! with no such link is never inside a cross-table scope.

use crate::model::{
    ActionDescriptor, Ident, InvariantDecl, InvariantKind, InvariantParams, TxnId,
};

use super::rules::MatchScope;

/// What the checker knows about an invariant.
#[derive(Clone, Copy, Debug)]
pub enum InvariantView<'a> {
    Attached(&'a InvariantDecl),
    Unattached(InvariantKind),
}

impl InvariantView<'_> {
    pub fn kind(&self) -> InvariantKind {
        match self {
            InvariantView::Attached(d) => d.kind,
            InvariantView::Unattached(k) => *k,
        }
    }
}

/// Spec-level entry point: attached invariant, no upstream transaction id.
pub fn scope_matches(
    scope: MatchScope,
    first: &ActionDescriptor,
    second: &ActionDescriptor,
    inv: &InvariantDecl,
) -> bool {
    scope_matches_in(scope, first, second, InvariantView::Attached(inv), None)
}

/// Whether `first` (from the earlier transaction) and `second` (from the later
/// one) fall inside `scope`. `upstream` is the earlier transaction's id, used
/// by branching-logic invariants.
pub fn scope_matches_in(
    scope: MatchScope,
    first: &ActionDescriptor,
    second: &ActionDescriptor,
    inv: InvariantView<'_>,
    upstream: Option<&TxnId>,
) -> bool {
    let same_table = first.table == second.table;
    let both_covered = || covers(inv, first) && covers(inv, second);
    match scope {
        MatchScope::SameField => {
            same_table
                && first.column.may_equal(&second.column)
                && first.row.may_equal(&second.row)
                && both_covered()
        }
        MatchScope::SameRow => same_table && first.row.may_equal(&second.row) && both_covered(),
        MatchScope::SameColumn | MatchScope::SameReferenceColumn => {
            same_table && first.column.may_equal(&second.column) && both_covered()
        }
        MatchScope::SameTable => same_table && both_covered(),
        MatchScope::SameTableDifferentUsers => {
            same_table && users_may_differ(first, second) && both_covered()
        }
        MatchScope::ChildOfDeletedRow => {
            same_table
                && second
                    .link
                    .parent
                    .as_ref()
                    .is_none_or(|p| p.may_equal(&first.row))
                && both_covered()
        }
        MatchScope::ReferencesDeletedRow
        | MatchScope::ConstrainedByRow
        | MatchScope::CorrespondsToSpecificInsert => {
            linked_pair(inv, first, second) && references_row(first, second)
        }
        MatchScope::ReferencesAnyKeyInReferencedTable
        | MatchScope::ConstrainedByAnyRowInTable
        | MatchScope::CorrespondsToAnyInsertInTable => {
            linked_pair(inv, first, second) && references_table(first, second)
        }
        MatchScope::AlwaysWait => always_wait(inv, first, second, upstream),
    }
}

/// Whether `action` lies inside the invariant's single-table attachment.
fn covers(inv: InvariantView<'_>, action: &ActionDescriptor) -> bool {
    let decl = match inv {
        InvariantView::Attached(d) => d,
        InvariantView::Unattached(_) => return true,
    };
    if !decl.scope.covers(action) {
        return false;
    }
    match &decl.params {
        InvariantParams::SequentialOrder { first, second } => match &action.column {
            Ident::Known(c) => c == first || c == second,
            Ident::Unknown => true,
        },
        _ => true,
    }
}

/// For two-table invariants: `first` touches the attached (referenced,
/// controlling, predecessor) table and `second` the partner table.
fn linked_pair(inv: InvariantView<'_>, first: &ActionDescriptor, second: &ActionDescriptor) -> bool {
    let decl = match inv {
        InvariantView::Attached(d) => d,
        InvariantView::Unattached(_) => return true,
    };
    let partner = match &decl.params {
        InvariantParams::ForeignKey { referencing } => referencing,
        InvariantParams::ConditionalValue { constrained } => constrained,
        InvariantParams::SequenceRequirement { successor } => successor,
        _ => &decl.scope.table,
    };
    decl.scope.covers(first) && &second.table == partner
}

fn references_table(first: &ActionDescriptor, second: &ActionDescriptor) -> bool {
    matches!(&second.link.references, Some((table, _)) if table == &first.table)
}

fn references_row(first: &ActionDescriptor, second: &ActionDescriptor) -> bool {
    matches!(
        &second.link.references,
        Some((table, key)) if table == &first.table && key.may_equal(&first.row)
    )
}

fn users_may_differ(first: &ActionDescriptor, second: &ActionDescriptor) -> bool {
    match (&first.link.session, &second.link.session) {
        (Some(Ident::Known(a)), Some(Ident::Known(b))) => a != b,
        _ => true,
    }
}

fn always_wait(
    inv: InvariantView<'_>,
    first: &ActionDescriptor,
    second: &ActionDescriptor,
    upstream: Option<&TxnId>,
) -> bool {
    match inv.kind() {
        InvariantKind::GroupedActions => {
            let same_group = match (&first.link.group, &second.link.group) {
                (Some(a), Some(b)) => a.may_equal(b),
                _ => false,
            };
            same_group
                && match inv {
                    InvariantView::Attached(decl) => {
                        let partner = match &decl.params {
                            InvariantParams::GroupedActions { partner } => partner.as_str(),
                            _ => decl.scope.table.as_str(),
                        };
                        let in_group = |a: &ActionDescriptor| {
                            a.table == decl.scope.table || a.table == partner
                        };
                        in_group(first) && in_group(second)
                    }
                    InvariantView::Unattached(_) => true,
                }
        }
        InvariantKind::BranchingLogic => {
            let waits_on_upstream = match (&second.link.condition_source, upstream) {
                (None, _) => false,
                (Some(source), Some(id)) => source.may_equal_str(id.as_str()),
                (Some(_), None) => true,
            };
            waits_on_upstream && covers(inv, first)
        }
        _ => true,
    }
}

/// Whether a kind's scopes can relate actions on different tables. Such
/// scopes always need link metadata on the later action.
pub(crate) fn crosses_tables(kind: InvariantKind) -> bool {
    matches!(
        kind,
        InvariantKind::ForeignKey
            | InvariantKind::ConditionalValue
            | InvariantKind::SequenceRequirement
            | InvariantKind::GroupedActions
            | InvariantKind::BranchingLogic
    )
}
