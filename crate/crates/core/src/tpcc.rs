//! A TPC-C style workload: five templates, their action descriptors and
//! compensators, the invariants that govern them, and a seeded generator with
//! periodic suspicious tagging and review scheduling.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::check::{pair_depends, CheckError, PairRegistry};
use crate::model::{
    ActionDescriptor, ActionKind, Attachment, CompletenessLevel, Ident, InvariantDecl,
    InvariantKind, InvariantParams, Interval, ModelError, Params, Transaction, TxnId,
};
use crate::registry::{ActionBuilder, TemplateError, TemplateRegistry};

use ActionKind::*;

pub const TABLES: [&str; 10] = [
    "warehouse",
    "district",
    "customer",
    "history",
    "orders",
    "new_order",
    "order_line",
    "item",
    "stock",
    "delivery",
];

/// First order id handed out by a fresh district.
pub const FIRST_NEW_O_ID: u64 = 3001;
/// Oldest undelivered order in a fresh district.
pub const FIRST_UNDELIVERED_O_ID: u64 = 2101;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TpccTxnType {
    NewOrder,
    Payment,
    OrderStatus,
    Delivery,
    StockLevel,
}

impl TpccTxnType {
    pub const ALL: [TpccTxnType; 5] = [
        TpccTxnType::NewOrder,
        TpccTxnType::Payment,
        TpccTxnType::OrderStatus,
        TpccTxnType::Delivery,
        TpccTxnType::StockLevel,
    ];

    /// Share of the mix, in percent.
    pub fn weight(self) -> u32 {
        match self {
            TpccTxnType::NewOrder => 45,
            TpccTxnType::Payment => 43,
            TpccTxnType::OrderStatus | TpccTxnType::Delivery | TpccTxnType::StockLevel => 4,
        }
    }

    pub fn template(self) -> &'static str {
        match self {
            TpccTxnType::NewOrder => "new_order",
            TpccTxnType::Payment => "payment",
            TpccTxnType::OrderStatus => "order_status",
            TpccTxnType::Delivery => "delivery",
            TpccTxnType::StockLevel => "stock_level",
        }
    }
}

impl fmt::Display for TpccTxnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.template())
    }
}

impl FromStr for TpccTxnType {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TpccTxnType::ALL
            .into_iter()
            .find(|t| t.template() == s)
            .ok_or_else(|| ModelError::Parse(format!("transaction type `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorkloadConfig {
    pub n_transactions: usize,
    pub si: Interval,
    pub ri: Interval,
    /// Share of reviewable entries resolved at each review event.
    pub review_fraction: f64,
    /// Share of resolved entries accepted rather than removed.
    pub accept_share: f64,
    pub seed: u64,
    pub warehouses: u32,
    pub districts: u32,
    pub customers: u32,
    pub items: u32,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        WorkloadConfig {
            n_transactions: 1000,
            si: Interval::Every(5),
            ri: Interval::Infinite,
            review_fraction: 0.8,
            accept_share: 0.0,
            seed: 42,
            warehouses: 1,
            districts: 10,
            customers: 3000,
            items: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorkloadError {
    #[error("{0} must be in [0, 1], got {1}")]
    Fraction(&'static str, f64),
    #[error("{0} must be at least 1")]
    Zero(&'static str),
}

impl WorkloadConfig {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        for (name, v) in [
            ("review_fraction", self.review_fraction),
            ("accept_share", self.accept_share),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(WorkloadError::Fraction(name, v));
            }
        }
        for (name, v) in [
            ("warehouses", self.warehouses),
            ("districts", self.districts),
            ("customers", self.customers),
            ("items", self.items),
        ] {
            if v == 0 {
                return Err(WorkloadError::Zero(name));
            }
        }
        for (name, v) in [("si", self.si), ("ri", self.ri)] {
            if v == Interval::Every(0) {
                return Err(WorkloadError::Zero(name));
            }
        }
        Ok(())
    }

    /// Whether the 1-indexed `position` is tagged suspicious.
    pub fn is_suspicious(&self, position: usize) -> bool {
        match self.si {
            Interval::Every(si) => (position as u64 - 1).is_multiple_of(si),
            Interval::Infinite => false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReviewEvent {
    /// Fires right after the transaction at this 1-indexed position.
    pub position: usize,
    pub fraction: f64,
}

pub fn review_schedule(config: &WorkloadConfig) -> Vec<ReviewEvent> {
    let Interval::Every(ri) = config.ri else {
        return Vec::new();
    };
    (1..)
        .map(|k| k * ri as usize)
        .take_while(|&p| p <= config.n_transactions)
        .map(|position| ReviewEvent {
            position,
            fraction: config.review_fraction,
        })
        .collect()
}

/// Picks `round(fraction * k)` of `reviewable` uniformly at random, returned
/// in their original order.
pub fn sample_reviews<R: Rng>(reviewable: &[TxnId], fraction: f64, rng: &mut R) -> Vec<TxnId> {
    let k = reviewable.len();
    let count = ((fraction * k as f64).round() as usize).min(k);
    let mut picked = index::sample(rng, k, count).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| reviewable[i].clone()).collect()
}

fn param_u64(params: &Params, name: &str) -> Result<u64, TemplateError> {
    let v = params
        .get(name)
        .ok_or_else(|| TemplateError::MissingParam(name.to_string()))?;
    v.as_u64().ok_or_else(|| TemplateError::MalformedParam {
        name: name.to_string(),
        reason: format!("expected a non-negative integer, got {v}"),
    })
}

/// Like [`param_u64`], but a missing value is unbound rather than an error.
fn param_ident(params: &Params, name: &str) -> Result<Option<u64>, TemplateError> {
    match params.get(name) {
        None | Some(Value::Null) => Ok(None),
        Some(_) => param_u64(params, name).map(Some),
    }
}

fn key(parts: &[Option<u64>]) -> Ident {
    if parts.iter().any(Option::is_none) {
        return Ident::Unknown;
    }
    let s: Vec<String> = parts.iter().map(|p| p.unwrap().to_string()).collect();
    Ident::Known(s.join(":"))
}

fn k(parts: &[u64]) -> Ident {
    key(&parts.iter().map(|&p| Some(p)).collect::<Vec<_>>())
}

fn tuples(params: &Params, name: &str, width: usize) -> Result<Option<Vec<Vec<u64>>>, TemplateError> {
    let malformed = |reason: &str| TemplateError::MalformedParam {
        name: name.to_string(),
        reason: reason.to_string(),
    };
    let list = match params.get(name) {
        None | Some(Value::Null) => return Ok(None),
        Some(Value::Array(list)) => list,
        Some(_) => return Err(malformed("expected an array")),
    };
    list.iter()
        .map(|row| {
            let row = row
                .as_array()
                .filter(|r| r.len() == width)
                .ok_or_else(|| malformed(&format!("expected arrays of {width} integers")))?;
            row.iter()
                .map(|v| v.as_u64().ok_or_else(|| malformed("expected integers")))
                .collect()
        })
        .collect::<Result<_, _>>()
        .map(Some)
}

struct NewOrderArgs {
    w: u64,
    d: u64,
    c: u64,
    o: u64,
    /// `(i_id, supply_w_id, quantity)`
    items: Vec<Vec<u64>>,
}

fn new_order_args(p: &Params) -> Result<NewOrderArgs, TemplateError> {
    let items = tuples(p, "items", 3)?.ok_or_else(|| TemplateError::MissingParam("items".into()))?;
    Ok(NewOrderArgs {
        w: param_u64(p, "w_id")?,
        d: param_u64(p, "d_id")?,
        c: param_u64(p, "c_id")?,
        o: param_u64(p, "o_id")?,
        items,
    })
}

fn new_order_actions(p: &Params) -> Result<Vec<ActionDescriptor>, TemplateError> {
    let a = new_order_args(p)?;
    let (w, d, c, o) = (a.w, a.d, a.c, a.o);
    let mut out = vec![
        ActionDescriptor::new(Read, "warehouse", "w_tax", k(&[w])),
        ActionDescriptor::new(Read, "customer", "c_discount", k(&[w, d, c])),
        ActionDescriptor::new(Increment, "district", "d_next_o_id", k(&[w, d])),
        ActionDescriptor::new(Insert, "orders", "o_id", k(&[w, d, o]))
            .references("customer", k(&[w, d, c])),
        ActionDescriptor::new(Insert, "new_order", "no_o_id", k(&[w, d, o])),
    ];
    for (n, item) in a.items.iter().enumerate() {
        let (i, sw) = (item[0], item[1]);
        out.push(ActionDescriptor::new(Read, "item", "i_price", k(&[i])));
        out.push(ActionDescriptor::new(Decrement, "stock", "s_quantity", k(&[sw, i])));
        out.push(ActionDescriptor::new(
            Insert,
            "order_line",
            "ol_i_id",
            k(&[w, d, o, n as u64 + 1]),
        ));
    }
    Ok(out)
}

fn new_order_compensation(p: &Params) -> Result<Vec<ActionDescriptor>, TemplateError> {
    let a = new_order_args(p)?;
    let (w, d, o) = (a.w, a.d, a.o);
    let mut out = vec![
        ActionDescriptor::new(Decrement, "district", "d_next_o_id", k(&[w, d])),
        ActionDescriptor::new(Delete, "orders", "o_id", k(&[w, d, o])),
        ActionDescriptor::new(Delete, "new_order", "no_o_id", k(&[w, d, o])),
    ];
    for (n, item) in a.items.iter().enumerate() {
        out.push(ActionDescriptor::new(Increment, "stock", "s_quantity", k(&[item[1], item[0]])));
        out.push(ActionDescriptor::new(
            Delete,
            "order_line",
            "ol_i_id",
            k(&[w, d, o, n as u64 + 1]),
        ));
    }
    Ok(out)
}

struct PaymentArgs {
    w: u64,
    d: Option<u64>,
    c: Option<u64>,
    h: Option<u64>,
}

fn payment_args(p: &Params) -> Result<PaymentArgs, TemplateError> {
    param_u64(p, "amount")?;
    Ok(PaymentArgs {
        w: param_u64(p, "w_id")?,
        d: param_ident(p, "d_id")?,
        c: param_ident(p, "c_id")?,
        h: param_ident(p, "h_id")?,
    })
}

fn payment_actions(p: &Params) -> Result<Vec<ActionDescriptor>, TemplateError> {
    let a = payment_args(p)?;
    let w = Some(a.w);
    Ok(vec![
        ActionDescriptor::new(Increment, "warehouse", "w_ytd", k(&[a.w])),
        ActionDescriptor::new(Increment, "district", "d_ytd", key(&[w, a.d])),
        ActionDescriptor::new(Decrement, "customer", "c_balance", key(&[w, a.d, a.c])),
        ActionDescriptor::new(Insert, "history", "h_amount", key(&[w, a.h])),
    ])
}

fn payment_compensation(p: &Params) -> Result<Vec<ActionDescriptor>, TemplateError> {
    let a = payment_args(p)?;
    let w = Some(a.w);
    Ok(vec![
        ActionDescriptor::new(Decrement, "warehouse", "w_ytd", k(&[a.w])),
        ActionDescriptor::new(Decrement, "district", "d_ytd", key(&[w, a.d])),
        ActionDescriptor::new(Increment, "customer", "c_balance", key(&[w, a.d, a.c])),
        ActionDescriptor::new(Delete, "history", "h_amount", key(&[w, a.h])),
    ])
}

fn order_status_actions(p: &Params) -> Result<Vec<ActionDescriptor>, TemplateError> {
    let (w, d, c) = (param_u64(p, "w_id")?, param_u64(p, "d_id")?, param_u64(p, "c_id")?);
    Ok(vec![
        ActionDescriptor::new(Read, "customer", "c_balance", k(&[w, d, c])),
        ActionDescriptor::new(Read, "orders", "o_id", Ident::Unknown),
        ActionDescriptor::new(Read, "order_line", "ol_delivery_d", Ident::Unknown),
    ])
}

fn stock_level_actions(p: &Params) -> Result<Vec<ActionDescriptor>, TemplateError> {
    let (w, d) = (param_u64(p, "w_id")?, param_u64(p, "d_id")?);
    param_u64(p, "threshold")?;
    Ok(vec![
        ActionDescriptor::new(Read, "district", "d_next_o_id", k(&[w, d])),
        ActionDescriptor::new(Read, "order_line", "ol_i_id", Ident::Unknown),
        ActionDescriptor::new(Read, "stock", "s_quantity", Ident::Unknown),
    ])
}

struct DeliveryArgs {
    w: u64,
    batch: u64,
    /// `(d_id, o_id, c_id)`; unbound until the oldest new orders are read.
    orders: Option<Vec<Vec<u64>>>,
}

fn delivery_args(p: &Params) -> Result<DeliveryArgs, TemplateError> {
    param_u64(p, "carrier_id")?;
    Ok(DeliveryArgs {
        w: param_u64(p, "w_id")?,
        batch: param_u64(p, "batch")?,
        orders: tuples(p, "orders", 3)?,
    })
}

fn delivery_actions(p: &Params) -> Result<Vec<ActionDescriptor>, TemplateError> {
    let a = delivery_args(p)?;
    let w = a.w;
    let mut out = Vec::new();
    match &a.orders {
        Some(orders) => {
            for o in orders {
                let (d, oid, c) = (o[0], o[1], o[2]);
                out.push(ActionDescriptor::new(Delete, "new_order", "no_o_id", k(&[w, d, oid])));
                out.push(ActionDescriptor::new(Update, "orders", "o_carrier_id", k(&[w, d, oid])));
                out.push(ActionDescriptor::new(
                    Update,
                    "order_line",
                    "ol_delivery_d",
                    k(&[w, d, oid]),
                ));
                out.push(ActionDescriptor::new(Increment, "customer", "c_balance", k(&[w, d, c])));
            }
        }
        None => {
            out.push(ActionDescriptor::new(Delete, "new_order", "no_o_id", Ident::Unknown));
            out.push(ActionDescriptor::new(Update, "orders", "o_carrier_id", Ident::Unknown));
            out.push(ActionDescriptor::new(Update, "order_line", "ol_delivery_d", Ident::Unknown));
            out.push(ActionDescriptor::new(Increment, "customer", "c_balance", Ident::Unknown));
        }
    }
    let previous = a.batch.checked_sub(1).map_or(Ident::Unknown, |b| k(&[w, b]));
    out.push(
        ActionDescriptor::new(Insert, "delivery", "batch", k(&[w, a.batch]))
            .references("delivery", previous),
    );
    Ok(out)
}

fn delivery_compensation(p: &Params) -> Result<Vec<ActionDescriptor>, TemplateError> {
    let a = delivery_args(p)?;
    let w = a.w;
    let orders = a.orders.ok_or_else(|| TemplateError::MissingParam("orders".into()))?;
    let mut out = Vec::new();
    for o in orders {
        let (d, oid, c) = (o[0], o[1], o[2]);
        out.push(ActionDescriptor::new(Insert, "new_order", "no_o_id", k(&[w, d, oid])));
        out.push(ActionDescriptor::new(Update, "orders", "o_carrier_id", k(&[w, d, oid])));
        out.push(ActionDescriptor::new(Update, "order_line", "ol_delivery_d", k(&[w, d, oid])));
        out.push(ActionDescriptor::new(Decrement, "customer", "c_balance", k(&[w, d, c])));
    }
    out.push(ActionDescriptor::new(Delete, "delivery", "batch", k(&[w, a.batch])));
    Ok(out)
}

fn nothing(_: &Params) -> Result<Vec<ActionDescriptor>, TemplateError> {
    Ok(Vec::new())
}

/// The five templates with their compensators.
pub fn registry() -> TemplateRegistry {
    type Build = fn(&Params) -> Result<Vec<ActionDescriptor>, TemplateError>;
    let mut reg = TemplateRegistry::new();
    let comp = |f: Build| -> Option<ActionBuilder> { Some(std::sync::Arc::new(f)) };
    let templates: [(TpccTxnType, Build, Option<ActionBuilder>); 5] = [
        (TpccTxnType::NewOrder, new_order_actions, comp(new_order_compensation)),
        (TpccTxnType::Payment, payment_actions, comp(payment_compensation)),
        (TpccTxnType::OrderStatus, order_status_actions, comp(nothing)),
        (TpccTxnType::Delivery, delivery_actions, comp(delivery_compensation)),
        (TpccTxnType::StockLevel, stock_level_actions, comp(nothing)),
    ];
    for (t, builder, compensator) in templates {
        reg.register(t.template(), builder, compensator)
            .expect("template names are distinct");
    }
    reg
}

/// Action descriptors for one template invocation.
pub fn template_actions(
    kind: TpccTxnType,
    params: &Params,
) -> Result<Vec<ActionDescriptor>, TemplateError> {
    match kind {
        TpccTxnType::NewOrder => new_order_actions(params),
        TpccTxnType::Payment => payment_actions(params),
        TpccTxnType::OrderStatus => order_status_actions(params),
        TpccTxnType::Delivery => delivery_actions(params),
        TpccTxnType::StockLevel => stock_level_actions(params),
    }
}

/// Invariants over the schema. Order ids are handed out by a per-district
/// counter, stock may not go negative, each delivery batch follows the
/// previous one, and orders reference live customers.
pub fn invariants() -> Vec<InvariantDecl> {
    vec![
        InvariantDecl::new(InvariantKind::AutoIncrement, Attachment::column("orders", "o_id")),
        InvariantDecl::new(InvariantKind::CheckMore, Attachment::column("stock", "s_quantity")),
        InvariantDecl::new(InvariantKind::SequenceRequirement, Attachment::table("delivery"))
            .with_params(InvariantParams::SequenceRequirement {
                successor: "delivery".into(),
            }),
        InvariantDecl::new(InvariantKind::ForeignKey, Attachment::table("customer")).with_params(
            InvariantParams::ForeignKey {
                referencing: "orders".into(),
            },
        ),
    ]
}

/// Per-stream generator state mirroring what the database would hand out.
struct Generator<'a> {
    config: &'a WorkloadConfig,
    rng: ChaCha8Rng,
    mix: WeightedIndex<u32>,
    next_o_id: HashMap<(u64, u64), u64>,
    undelivered: HashMap<(u64, u64), u64>,
    customer_of: HashMap<(u64, u64, u64), u64>,
    batch: HashMap<u64, u64>,
    history: u64,
}

impl<'a> Generator<'a> {
    fn new(config: &'a WorkloadConfig) -> Self {
        Generator {
            config,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            mix: WeightedIndex::new(TpccTxnType::ALL.map(TpccTxnType::weight))
                .expect("weights are positive"),
            next_o_id: HashMap::new(),
            undelivered: HashMap::new(),
            customer_of: HashMap::new(),
            batch: HashMap::new(),
            history: 0,
        }
    }

    fn draw(&mut self, hi: u32) -> u64 {
        self.rng.gen_range(1..=hi as u64)
    }

    fn next(&mut self) -> (TpccTxnType, Params) {
        let kind = TpccTxnType::ALL[self.mix.sample(&mut self.rng)];
        let c = self.config;
        let w = self.draw(c.warehouses);
        let params = match kind {
            TpccTxnType::NewOrder => {
                let d = self.draw(c.districts);
                let cust = self.draw(c.customers);
                let o = self.next_o_id.entry((w, d)).or_insert(FIRST_NEW_O_ID);
                let o_id = *o;
                *o += 1;
                self.customer_of.insert((w, d, o_id), cust);
                let n_items = self.rng.gen_range(5..=15);
                let items: Vec<Value> = (0..n_items)
                    .map(|_| {
                        let i = self.draw(c.items);
                        let remote = c.warehouses > 1 && self.rng.gen_ratio(1, 100);
                        let sw = if remote { self.draw(c.warehouses) } else { w };
                        json!([i, sw, self.rng.gen_range(1..=10)])
                    })
                    .collect();
                json!({"w_id": w, "d_id": d, "c_id": cust, "o_id": o_id, "items": items})
            }
            TpccTxnType::Payment => {
                self.history += 1;
                json!({
                    "w_id": w,
                    "d_id": self.draw(c.districts),
                    "c_id": self.draw(c.customers),
                    "h_id": self.history,
                    "amount": self.rng.gen_range(1..=5000),
                })
            }
            TpccTxnType::OrderStatus => json!({
                "w_id": w,
                "d_id": self.draw(c.districts),
                "c_id": self.draw(c.customers),
            }),
            TpccTxnType::Delivery => {
                let mut orders = Vec::new();
                for d in 1..=c.districts as u64 {
                    let next = *self.next_o_id.get(&(w, d)).unwrap_or(&FIRST_NEW_O_ID);
                    let oldest = self.undelivered.entry((w, d)).or_insert(FIRST_UNDELIVERED_O_ID);
                    if *oldest < next {
                        let o_id = *oldest;
                        *oldest += 1;
                        let cust = match self.customer_of.remove(&(w, d, o_id)) {
                            Some(cust) => cust,
                            None => self.rng.gen_range(1..=c.customers as u64),
                        };
                        orders.push(json!([d, o_id, cust]));
                    }
                }
                let batch = self.batch.entry(w).or_insert(0);
                *batch += 1;
                json!({
                    "w_id": w,
                    "carrier_id": self.rng.gen_range(1..=10),
                    "batch": *batch,
                    "orders": orders,
                })
            }
            TpccTxnType::StockLevel => json!({
                "w_id": w,
                "d_id": self.draw(c.districts),
                "threshold": self.rng.gen_range(10..=20),
            }),
        };
        let Value::Object(params) = params else {
            unreachable!("params are built as objects")
        };
        (kind, params)
    }
}

pub fn txn_id(position: usize) -> TxnId {
    TxnId(format!("txn-{position:06}"))
}

/// Generates the seeded stream. Ids are `txn-000001` onwards and arrival
/// sequence numbers equal the 1-indexed position.
pub fn generate(config: &WorkloadConfig) -> Vec<Transaction> {
    generate_with(config, &registry())
}

pub fn generate_with(config: &WorkloadConfig, registry: &TemplateRegistry) -> Vec<Transaction> {
    let mut g = Generator::new(config);
    (1..=config.n_transactions)
        .map(|pos| {
            let (kind, params) = g.next();
            registry
                .instantiate(
                    txn_id(pos),
                    kind.template(),
                    params,
                    config.is_suspicious(pos),
                    pos as u64,
                )
                .expect("generated parameters are complete")
        })
        .collect()
}

/// One line of the replay format: index, type, suspicious flag, then the
/// parameters as `key=value` pairs with JSON values.
pub fn dump_line(index: usize, txn: &Transaction) -> String {
    let mut line = format!("{index} {} {}", txn.template, txn.suspicious);
    for (k, v) in &txn.params {
        line.push_str(&format!(" {k}={v}"));
    }
    line
}

pub fn dump(stream: &[Transaction]) -> String {
    stream
        .iter()
        .enumerate()
        .map(|(i, t)| dump_line(i + 1, t) + "\n")
        .collect()
}

/// Template pairs `(earlier, later)` for which some pair of generated
/// instances depends at `level`. Instances come from a dense single-district
/// stream so that keys collide as often as the templates allow; each earlier
/// instance is paired with the next instance of the later type.
pub fn dependency_table(level: CompletenessLevel) -> BTreeSet<(TpccTxnType, TpccTxnType)> {
    let config = WorkloadConfig {
        n_transactions: 3000,
        si: Interval::Infinite,
        districts: 1,
        customers: 5,
        items: 10,
        seed: 7,
        ..WorkloadConfig::default()
    };
    let stream = generate(&config);
    let invs = invariants();
    let kind_of = |t: &Transaction| TpccTxnType::from_str(&t.template).expect("tpcc template");
    let mut out = BTreeSet::new();
    for a in TpccTxnType::ALL {
        for b in TpccTxnType::ALL {
            let earlier = stream.iter().enumerate().filter(|(_, t)| kind_of(t) == a);
            let hit = earlier.take(200).any(|(i, t1)| {
                stream[i + 1..]
                    .iter()
                    .find(|t| kind_of(t) == b)
                    .is_some_and(|t2| pair_depends(t1, t2, &invs, level).depends)
            });
            if hit {
                out.insert((a, b));
            }
        }
    }
    out
}

/// Registers a pair predicate for every template pair that can depend with
/// complete information. Each predicate rebuilds both transactions and runs
/// the rule matrix at the requested level.
pub fn pair_registry(templates: &TemplateRegistry) -> Result<PairRegistry, CheckError> {
    let mut pairs = PairRegistry::new();
    for (a, b) in dependency_table(CompletenessLevel::CompleteQuery) {
        let invs = invariants();
        pairs.register(templates, a.template(), b.template(), move |pa, pb, level| {
            let build = |kind: TpccTxnType, params: &Params, seq: u64| Transaction {
                id: txn_id(seq as usize),
                template: kind.template().to_string(),
                params: params.clone(),
                actions: template_actions(kind, params).unwrap_or_default(),
                suspicious: false,
                arrival_seq: seq,
            };
            let (t1, t2) = (build(a, pa, 1), build(b, pb, 2));
            pair_depends(&t1, &t2, &invs, level).depends
        })?;
    }
    Ok(pairs)
}
