//! Domain types shared by the checker, the manager, the HTTP service and the
//! benchmark harness.
//!
//! Everything here is a plain value type. Row and column identifiers are
//! opaque strings scoped by table; [`Ident::Unknown`] is an explicit sentinel
//! for a value that a transaction only learns by reading the database, so the
//! completeness of a transaction can be computed from its descriptors alone.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Opaque key-value parameters of a transaction request.
pub type Params = serde_json::Map<String, serde_json::Value>;

/// A row or column identifier that may not be bound yet.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Ident {
    Known(String),
    Unknown,
}

impl Ident {
    pub fn known(value: impl Into<String>) -> Self {
        Ident::Known(value.into())
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, Ident::Unknown)
    }

    pub fn as_known(&self) -> Option<&str> {
        match self {
            Ident::Known(v) => Some(v),
            Ident::Unknown => None,
        }
    }

    /// Equality where an unbound side matches anything.
    pub fn may_equal(&self, other: &Ident) -> bool {
        match (self, other) {
            (Ident::Known(a), Ident::Known(b)) => a == b,
            _ => true,
        }
    }

    /// Equality against a concrete value where an unbound side matches.
    pub fn may_equal_str(&self, other: &str) -> bool {
        match self {
            Ident::Known(a) => a == other,
            Ident::Unknown => true,
        }
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ident::Known(v) => f.write_str(v),
            Ident::Unknown => f.write_str("?"),
        }
    }
}

impl From<&str> for Ident {
    fn from(value: &str) -> Self {
        Ident::Known(value.to_string())
    }
}

impl From<String> for Ident {
    fn from(value: String) -> Self {
        Ident::Known(value)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ActionKind {
    Insert,
    Update,
    Delete,
    Increment,
    Decrement,
    /// Mutation of a collection-typed table (set, list, map).
    Mutate,
    Read,
}

impl ActionKind {
    pub const ALL: [ActionKind; 7] = [
        ActionKind::Insert,
        ActionKind::Update,
        ActionKind::Delete,
        ActionKind::Increment,
        ActionKind::Decrement,
        ActionKind::Mutate,
        ActionKind::Read,
    ];

    pub fn is_write(self) -> bool {
        self != ActionKind::Read
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Reference metadata carried by an action.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Link {
    /// Referenced `(table, key)` for foreign keys, conditional values and
    /// sequence requirements.
    pub references: Option<(String, Ident)>,
    /// Parent row for tree edges.
    pub parent: Option<Ident>,
    /// Endpoint pair for graph edges.
    pub edge: Option<(Ident, Ident)>,
    /// Session or user on whose behalf the action runs.
    pub session: Option<Ident>,
    /// Group id for grouped actions.
    pub group: Option<Ident>,
    /// Transaction whose outcome this action branches on.
    pub condition_source: Option<Ident>,
}

impl Link {
    fn has_unknown(&self) -> bool {
        let ref_unknown = self.references.as_ref().is_some_and(|(_, k)| k.is_unknown());
        let edge_unknown = self
            .edge
            .as_ref()
            .is_some_and(|(a, b)| a.is_unknown() || b.is_unknown());
        ref_unknown
            || edge_unknown
            || [&self.parent, &self.session, &self.group, &self.condition_source]
                .into_iter()
                .any(|v| v.as_ref().is_some_and(Ident::is_unknown))
    }
}

/// One logical database action; the unit the dependency checker reasons over.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActionDescriptor {
    pub kind: ActionKind,
    pub table: String,
    pub column: Ident,
    pub row: Ident,
    #[serde(default)]
    pub link: Link,
}

impl ActionDescriptor {
    pub fn new(
        kind: ActionKind,
        table: impl Into<String>,
        column: impl Into<Ident>,
        row: impl Into<Ident>,
    ) -> Self {
        ActionDescriptor {
            kind,
            table: table.into(),
            column: column.into(),
            row: row.into(),
            link: Link::default(),
        }
    }

    pub fn with_link(mut self, link: Link) -> Self {
        self.link = link;
        self
    }

    pub fn references(mut self, table: impl Into<String>, key: impl Into<Ident>) -> Self {
        self.link.references = Some((table.into(), key.into()));
        self
    }

    pub fn session(mut self, user: impl Into<Ident>) -> Self {
        self.link.session = Some(user.into());
        self
    }

    pub fn has_unknown(&self) -> bool {
        self.column.is_unknown() || self.row.is_unknown() || self.link.has_unknown()
    }
}

impl fmt::Display for ActionDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}.{}[{}]", self.kind, self.table, self.column, self.row)
    }
}

/// Invariant taxonomy, one variant per row of the rule matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InvariantKind {
    Uniqueness,
    ForeignKey,
    AutoIncrement,
    CheckLess,
    CheckMore,
    CounterLess,
    CounterMore,
    CollectionSize,
    TreeParent,
    GraphAcyclic,
    SequentialOrder,
    ConditionalValue,
    SessionConsistency,
    SequenceRequirement,
    GroupedActions,
    BranchingLogic,
}

impl InvariantKind {
    pub const ALL: [InvariantKind; 16] = [
        InvariantKind::Uniqueness,
        InvariantKind::ForeignKey,
        InvariantKind::AutoIncrement,
        InvariantKind::CheckLess,
        InvariantKind::CheckMore,
        InvariantKind::CounterLess,
        InvariantKind::CounterMore,
        InvariantKind::CollectionSize,
        InvariantKind::TreeParent,
        InvariantKind::GraphAcyclic,
        InvariantKind::SequentialOrder,
        InvariantKind::ConditionalValue,
        InvariantKind::SessionConsistency,
        InvariantKind::SequenceRequirement,
        InvariantKind::GroupedActions,
        InvariantKind::BranchingLogic,
    ];
}

impl fmt::Display for InvariantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Where an invariant is attached. An empty column set or a missing row set
/// means "every column" / "every row" of the table.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attachment {
    pub table: String,
    pub columns: BTreeSet<String>,
    pub rows: Option<BTreeSet<String>>,
}

impl Attachment {
    pub fn table(table: impl Into<String>) -> Self {
        Attachment {
            table: table.into(),
            columns: BTreeSet::new(),
            rows: None,
        }
    }

    pub fn column(table: impl Into<String>, column: impl Into<String>) -> Self {
        let mut a = Attachment::table(table);
        a.columns.insert(column.into());
        a
    }

    pub fn with_rows<I, S>(mut self, rows: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.rows = Some(rows.into_iter().map(Into::into).collect());
        self
    }

    /// Whether `action` may touch the attached region. Unbound columns and rows
    /// are treated as inside.
    pub fn covers(&self, action: &ActionDescriptor) -> bool {
        if action.table != self.table {
            return false;
        }
        let column_ok = self.columns.is_empty()
            || match &action.column {
                Ident::Known(c) => self.columns.contains(c),
                Ident::Unknown => true,
            };
        let row_ok = match (&self.rows, &action.row) {
            (None, _) | (_, Ident::Unknown) => true,
            (Some(rows), Ident::Known(r)) => rows.contains(r),
        };
        column_ok && row_ok
    }
}

/// Kind-specific parameters of an invariant declaration.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum InvariantParams {
    #[default]
    None,
    /// The attachment is the referenced table; this names the referencing one.
    ForeignKey { referencing: String },
    /// Ordered column pair within one row, e.g. `(start_date, end_date)`.
    SequentialOrder { first: String, second: String },
    /// The attachment is the controlling table (e.g. VIP status); this names
    /// the constrained table (e.g. balances).
    ConditionalValue { constrained: String },
    /// The attachment is the predecessor table; this names the successor.
    SequenceRequirement { successor: String },
    /// The attachment is one member of the group; this names the partner.
    GroupedActions { partner: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantDecl {
    pub kind: InvariantKind,
    pub scope: Attachment,
    #[serde(default)]
    pub params: InvariantParams,
}

impl InvariantDecl {
    pub fn new(kind: InvariantKind, scope: Attachment) -> Self {
        InvariantDecl {
            kind,
            scope,
            params: InvariantParams::None,
        }
    }

    pub fn with_params(mut self, params: InvariantParams) -> Self {
        self.params = params;
        self
    }

    /// Every table the declaration mentions.
    pub fn tables(&self) -> Vec<&str> {
        let mut out = vec![self.scope.table.as_str()];
        match &self.params {
            InvariantParams::ForeignKey { referencing: t }
            | InvariantParams::ConditionalValue { constrained: t }
            | InvariantParams::SequenceRequirement { successor: t }
            | InvariantParams::GroupedActions { partner: t } => out.push(t),
            InvariantParams::None | InvariantParams::SequentialOrder { .. } => {}
        }
        out
    }

    /// Checks the declaration against a schema of known table names.
    pub fn validate(&self, has_table: impl Fn(&str) -> bool) -> Result<(), ModelError> {
        for table in self.tables() {
            if !has_table(table) {
                return Err(ModelError::UnknownTable(table.to_string()));
            }
        }
        let params_ok = match self.kind {
            InvariantKind::ForeignKey => matches!(self.params, InvariantParams::ForeignKey { .. }),
            InvariantKind::ConditionalValue => {
                matches!(self.params, InvariantParams::ConditionalValue { .. })
            }
            InvariantKind::SequenceRequirement => {
                matches!(self.params, InvariantParams::SequenceRequirement { .. })
            }
            InvariantKind::GroupedActions => {
                matches!(self.params, InvariantParams::GroupedActions { .. })
            }
            _ => true,
        };
        if !params_ok {
            return Err(ModelError::MissingInvariantParams(self.kind));
        }
        Ok(())
    }
}

/// How much the checker knows about queries and invariants.
///
/// Ordered by information content: `NoInvariantInfo < PartialQuery < CompleteQuery`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CompletenessLevel {
    NoInvariantInfo,
    PartialQuery,
    CompleteQuery,
}

impl CompletenessLevel {
    pub const ALL: [CompletenessLevel; 3] = [
        CompletenessLevel::CompleteQuery,
        CompletenessLevel::PartialQuery,
        CompletenessLevel::NoInvariantInfo,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CompletenessLevel::CompleteQuery => "complete",
            CompletenessLevel::PartialQuery => "partial",
            CompletenessLevel::NoInvariantInfo => "none",
        }
    }
}

impl fmt::Display for CompletenessLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CompletenessLevel {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "complete" => Ok(CompletenessLevel::CompleteQuery),
            "partial" => Ok(CompletenessLevel::PartialQuery),
            "none" => Ok(CompletenessLevel::NoInvariantInfo),
            other => Err(ModelError::Parse(format!("completeness level `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TxnId(pub String);

impl TxnId {
    pub fn new(id: impl Into<String>) -> Self {
        TxnId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TxnId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for TxnId {
    fn from(value: &str) -> Self {
        TxnId(value.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transaction {
    pub id: TxnId,
    pub template: String,
    pub params: Params,
    pub actions: Vec<ActionDescriptor>,
    pub suspicious: bool,
    pub arrival_seq: u64,
}

impl Transaction {
    /// `CompleteQuery` when every descriptor is fully bound, otherwise
    /// `PartialQuery`.
    pub fn completeness(&self) -> CompletenessLevel {
        if self.actions.iter().any(ActionDescriptor::has_unknown) {
            CompletenessLevel::PartialQuery
        } else {
            CompletenessLevel::CompleteQuery
        }
    }

    pub fn writes(&self) -> impl Iterator<Item = &ActionDescriptor> {
        self.actions.iter().filter(|a| a.kind.is_write())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransactionStatus {
    Submitted,
    Buffered,
    Held,
    Committed,
    Removed,
    Discarded,
}

impl TransactionStatus {
    pub fn is_terminal(self) -> bool {
        matches!(
            self,
            TransactionStatus::Committed | TransactionStatus::Removed | TransactionStatus::Discarded
        )
    }

    /// The lifecycle edges the manager may take.
    pub fn can_transition_to(self, next: TransactionStatus) -> bool {
        use TransactionStatus::*;
        matches!(
            (self, next),
            (Submitted, Committed | Buffered | Held | Discarded)
                | (Held, Committed | Removed | Discarded)
                | (Buffered, Committed | Removed | Discarded)
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TransactionStatus::Submitted => "submitted",
            TransactionStatus::Buffered => "buffered",
            TransactionStatus::Held => "held",
            TransactionStatus::Committed => "committed",
            TransactionStatus::Removed => "removed",
            TransactionStatus::Discarded => "discarded",
        }
    }
}

impl fmt::Display for TransactionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Inverse of a committed transaction, buffered in compensating mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompensatingTransaction {
    pub for_txn: TxnId,
    pub actions: Vec<ActionDescriptor>,
}

/// An interval that may be infinite (SI and RI).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Interval {
    Every(u64),
    Infinite,
}

impl Interval {
    pub fn finite(self) -> Option<u64> {
        match self {
            Interval::Every(n) => Some(n),
            Interval::Infinite => None,
        }
    }
}

impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Interval {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Interval::Every(a), Interval::Every(b)) => a.cmp(b),
            (Interval::Every(_), Interval::Infinite) => Ordering::Less,
            (Interval::Infinite, Interval::Every(_)) => Ordering::Greater,
            (Interval::Infinite, Interval::Infinite) => Ordering::Equal,
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Interval::Every(n) => write!(f, "{n}"),
            Interval::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Interval {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "inf" | "infinite" | "INF" => Ok(Interval::Infinite),
            _ => match s.parse::<u64>() {
                Ok(n) if n > 0 => Ok(Interval::Every(n)),
                _ => Err(ModelError::Parse(format!("interval `{s}`"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("unknown table `{0}`")]
    UnknownTable(String),
    #[error("{0} declaration is missing its kind-specific parameters")]
    MissingInvariantParams(InvariantKind),
    #[error("cannot parse {0}")]
    Parse(String),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn completeness_is_ordered_by_information() {
        assert!(CompletenessLevel::CompleteQuery > CompletenessLevel::PartialQuery);
        assert!(CompletenessLevel::PartialQuery > CompletenessLevel::NoInvariantInfo);
    }

    #[test]
    fn terminal_states_have_no_exits() {
        use TransactionStatus::*;
        let all = [Submitted, Buffered, Held, Committed, Removed, Discarded];
        for from in all.into_iter().filter(|s| s.is_terminal()) {
            assert!(all.iter().all(|to| !from.can_transition_to(*to)));
        }
        assert!(Submitted.can_transition_to(Held));
        assert!(!Held.can_transition_to(Buffered));
        assert!(!Buffered.can_transition_to(Held));
    }

    #[test]
    fn unknown_fields_make_a_transaction_partial() {
        let mut t = Transaction {
            id: "t".into(),
            template: "x".into(),
            params: Params::new(),
            actions: vec![ActionDescriptor::new(ActionKind::Decrement, "accounts", "balance", "1")],
            suspicious: false,
            arrival_seq: 1,
        };
        assert_eq!(t.completeness(), CompletenessLevel::CompleteQuery);
        t.actions.push(ActionDescriptor::new(
            ActionKind::Decrement,
            "accounts",
            "balance",
            Ident::Unknown,
        ));
        assert_eq!(t.completeness(), CompletenessLevel::PartialQuery);
    }

    #[test]
    fn attachment_coverage_is_conservative_for_unknowns() {
        let a = Attachment::column("accounts", "balance").with_rows(["1"]);
        let hit = ActionDescriptor::new(ActionKind::Decrement, "accounts", "balance", "1");
        let other_row = ActionDescriptor::new(ActionKind::Decrement, "accounts", "balance", "2");
        let unknown_row =
            ActionDescriptor::new(ActionKind::Decrement, "accounts", "balance", Ident::Unknown);
        let other_table = ActionDescriptor::new(ActionKind::Decrement, "loans", "balance", "1");
        assert!(a.covers(&hit));
        assert!(!a.covers(&other_row));
        assert!(a.covers(&unknown_row));
        assert!(!a.covers(&other_table));
    }

    #[test]
    fn foreign_key_must_name_both_tables() {
        let schema = ["dept", "employee"];
        let fk = InvariantDecl::new(InvariantKind::ForeignKey, Attachment::table("dept"));
        assert_eq!(
            fk.validate(|t| schema.contains(&t)),
            Err(ModelError::MissingInvariantParams(InvariantKind::ForeignKey))
        );
        let fk = fk.with_params(InvariantParams::ForeignKey {
            referencing: "payroll".into(),
        });
        assert_eq!(
            fk.validate(|t| schema.contains(&t)),
            Err(ModelError::UnknownTable("payroll".into()))
        );
    }

    #[test]
    fn intervals_parse_and_order() {
        assert_eq!("inf".parse::<Interval>().unwrap(), Interval::Infinite);
        assert_eq!("5".parse::<Interval>().unwrap(), Interval::Every(5));
        assert!("0".parse::<Interval>().is_err());
        assert!(Interval::Every(500) < Interval::Infinite);
    }
}
