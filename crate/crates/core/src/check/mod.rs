//! Invariant-satisfaction dependency checking.
//!
//! A later transaction depends on an earlier, still-buffered one when some
//! declared invariant lists their pair of actions and the two actions fall
//! inside the rule's match scope for the current completeness level. The
//! check is logical only: it never touches a database and says nothing about
//! whether either transaction can ultimately commit.
//!
//! With no invariant information the checker cannot know where any
//! constraint lives, so it assumes every kind in the taxonomy may be attached
//! anywhere and matches each with its widest scope.

mod rules;
mod scope;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

pub use rules::{dump_rules, rule_lookup, rule_table, MatchScope, RuleEntry};
pub use scope::{scope_matches, scope_matches_in, InvariantView};

use crate::model::{
    ActionDescriptor, CompletenessLevel, InvariantDecl, InvariantKind, Params, Transaction,
};
use crate::registry::{TemplateError, TemplateRegistry};

/// Outcome of a pair check. From [`pair_depends`], `depends` holds exactly
/// when `matched_rule` is set; a verdict produced by a registered template-pair
/// predicate carries no rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DependencyVerdict {
    pub depends: bool,
    pub matched_rule: Option<(InvariantKind, MatchScope)>,
    pub explanation: String,
}

impl DependencyVerdict {
    pub fn independent() -> Self {
        DependencyVerdict {
            depends: false,
            matched_rule: None,
            explanation: "no invariant rule matched".to_string(),
        }
    }

    fn registered(depends: bool, first: &str, second: &str) -> Self {
        DependencyVerdict {
            depends,
            matched_rule: None,
            explanation: format!(
                "registered pair ({first}, {second}) {}",
                if depends { "depends" } else { "is independent" }
            ),
        }
    }
}

/// The first `(invariant, action, action)` triple that triggers a rule.
#[derive(Clone, Copy, Debug)]
pub struct RuleMatch<'a> {
    pub kind: InvariantKind,
    pub scope: MatchScope,
    pub first: &'a ActionDescriptor,
    pub second: &'a ActionDescriptor,
}

impl RuleMatch<'_> {
    fn into_verdict(self, level: CompletenessLevel) -> DependencyVerdict {
        DependencyVerdict {
            depends: true,
            matched_rule: Some((self.kind, self.scope)),
            explanation: format!(
                "{} at {}: `{}` then `{}` match {}",
                self.kind, level, self.first, self.second, self.scope
            ),
        }
    }
}

/// Write actions of a transaction indexed for pair checks: grouped by table,
/// plus the writes that carry cross-table link metadata.
#[derive(Debug)]
pub struct Footprint<'a> {
    by_table: Vec<(&'a str, Vec<&'a ActionDescriptor>)>,
    linked: Vec<&'a ActionDescriptor>,
}

impl<'a> Footprint<'a> {
    pub fn of(txn: &'a Transaction) -> Self {
        let mut by_table: Vec<(&str, Vec<&ActionDescriptor>)> = Vec::new();
        let mut linked = Vec::new();
        for a in txn.writes() {
            match by_table.iter_mut().find(|(t, _)| *t == a.table) {
                Some((_, v)) => v.push(a),
                None => by_table.push((&a.table, vec![a])),
            }
            let l = &a.link;
            if l.references.is_some() || l.group.is_some() || l.condition_source.is_some() {
                linked.push(a);
            }
        }
        Footprint { by_table, linked }
    }

    fn on_table(&self, table: &str) -> &[&'a ActionDescriptor] {
        self.by_table
            .iter()
            .find(|(t, _)| *t == table)
            .map_or(&[], |(_, v)| v.as_slice())
    }

    /// Later-side actions that could pair with `first` under `kind`.
    fn candidates(&self, kind: InvariantKind, first: &ActionDescriptor) -> &[&'a ActionDescriptor] {
        if scope::crosses_tables(kind) {
            &self.linked
        } else {
            self.on_table(&first.table)
        }
    }
}

/// Finds the first rule match in invariant declaration order, then action
/// order of `earlier`, then action order of `later`. With no invariant
/// information every kind is tried, unattached, in taxonomy order.
pub fn find_rule_match<'a>(
    earlier: &'a Transaction,
    later: &Footprint<'a>,
    invariants: &[InvariantDecl],
    level: CompletenessLevel,
) -> Option<RuleMatch<'a>> {
    let try_view = |inv: InvariantView<'_>, tables: Option<Vec<&str>>| {
        let kind = inv.kind();
        for first in earlier.writes() {
            if tables.as_ref().is_some_and(|t| !t.contains(&first.table.as_str())) {
                continue;
            }
            for &second in later.candidates(kind, first) {
                let Some(scope) = rule_lookup(kind, first.kind, second.kind, level) else {
                    continue;
                };
                if scope_matches_in(scope, first, second, inv, Some(&earlier.id)) {
                    return Some(RuleMatch {
                        kind,
                        scope,
                        first,
                        second,
                    });
                }
            }
        }
        None
    };
    match level {
        CompletenessLevel::NoInvariantInfo => InvariantKind::ALL
            .into_iter()
            .find_map(|k| try_view(InvariantView::Unattached(k), None)),
        _ => invariants.iter().find_map(|decl| {
            // Branching waits may land on any table of the later transaction.
            let tables = (decl.kind != InvariantKind::BranchingLogic).then(|| decl.tables());
            try_view(InvariantView::Attached(decl), tables)
        }),
    }
}

/// Does `later` depend on `earlier` under `invariants` at `level`?
pub fn pair_depends(
    earlier: &Transaction,
    later: &Transaction,
    invariants: &[InvariantDecl],
    level: CompletenessLevel,
) -> DependencyVerdict {
    match find_rule_match(earlier, &Footprint::of(later), invariants, level) {
        Some(m) => m.into_verdict(level),
        None => DependencyVerdict::independent(),
    }
}

pub type PairPredicate = Arc<dyn Fn(&Params, &Params, CompletenessLevel) -> bool + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CheckError {
    #[error(transparent)]
    Template(#[from] TemplateError),
}

/// Developer-registered dependency predicates keyed by
/// `(earlier template, later template)`.
#[derive(Clone, Default)]
pub struct PairRegistry {
    pairs: BTreeMap<(String, String), PairPredicate>,
}

impl fmt::Debug for PairRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.pairs.keys()).finish()
    }
}

impl PairRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register<P>(
        &mut self,
        templates: &TemplateRegistry,
        first: &str,
        second: &str,
        predicate: P,
    ) -> Result<(), CheckError>
    where
        P: Fn(&Params, &Params, CompletenessLevel) -> bool + Send + Sync + 'static,
    {
        templates.resolve(first)?;
        templates.resolve(second)?;
        self.pairs
            .insert((first.to_string(), second.to_string()), Arc::new(predicate));
        Ok(())
    }

    pub fn get(&self, first: &str, second: &str) -> Option<&PairPredicate> {
        self.pairs.get(&(first.to_string(), second.to_string()))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.pairs.keys().map(|(a, b)| (a.as_str(), b.as_str()))
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// How the registered pair table combines with generic rule matching.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PairPolicy {
    /// Rule matrix only.
    #[default]
    Generic,
    /// Registered predicate when the template pair has one, rule matrix otherwise.
    RegisteredFirst,
    /// Registered predicates only; unregistered template pairs are independent.
    RegisteredOnly,
}

/// Everything a manager needs to decide dependencies.
#[derive(Clone, Debug)]
pub struct DependencyChecker {
    pub invariants: Vec<InvariantDecl>,
    pub level: CompletenessLevel,
    pub pairs: PairRegistry,
    pub policy: PairPolicy,
}

impl DependencyChecker {
    pub fn new(invariants: Vec<InvariantDecl>, level: CompletenessLevel) -> Self {
        DependencyChecker {
            invariants,
            level,
            pairs: PairRegistry::new(),
            policy: PairPolicy::Generic,
        }
    }

    pub fn with_pairs(mut self, pairs: PairRegistry, policy: PairPolicy) -> Self {
        self.pairs = pairs;
        self.policy = policy;
        self
    }

    /// The level used for a pair: the configured one, lowered to partial when
    /// the earlier transaction has unbound rows or columns.
    pub fn effective_level(&self, earlier: &Transaction) -> CompletenessLevel {
        self.level.min(earlier.completeness())
    }

    pub fn check(&self, earlier: &Transaction, later: &Transaction) -> DependencyVerdict {
        debug_assert!(earlier.arrival_seq < later.arrival_seq);
        let level = self.effective_level(earlier);
        if self.policy != PairPolicy::Generic {
            if let Some(p) = self.pairs.get(&earlier.template, &later.template) {
                let depends = p(&earlier.params, &later.params, level);
                return DependencyVerdict::registered(depends, &earlier.template, &later.template);
            }
            if self.policy == PairPolicy::RegisteredOnly {
                return DependencyVerdict::independent();
            }
        }
        pair_depends(earlier, later, &self.invariants, level)
    }

    /// Same decision as [`check`](Self::check) without building an explanation.
    pub fn depends(&self, earlier: &Transaction, later: &Transaction) -> Option<Reason> {
        self.depends_on(earlier, later, &Footprint::of(later))
    }

    /// [`depends`](Self::depends) with the later transaction's footprint
    /// computed once by the caller.
    pub fn depends_on(
        &self,
        earlier: &Transaction,
        later: &Transaction,
        footprint: &Footprint<'_>,
    ) -> Option<Reason> {
        let level = self.effective_level(earlier);
        if self.policy != PairPolicy::Generic {
            if let Some(p) = self.pairs.get(&earlier.template, &later.template) {
                return p(&earlier.params, &later.params, level).then_some(Reason::Registered);
            }
            if self.policy == PairPolicy::RegisteredOnly {
                return None;
            }
        }
        find_rule_match(earlier, footprint, &self.invariants, level)
            .map(|m| Reason::Rule(m.kind, m.scope))
    }
}

/// Why a dependency edge exists.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reason {
    Rule(InvariantKind, MatchScope),
    Registered,
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reason::Rule(kind, scope) => write!(f, "{kind}/{scope}"),
            Reason::Registered => f.write_str("registered-pair"),
        }
    }
}
