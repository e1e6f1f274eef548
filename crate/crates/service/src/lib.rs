//! HTTP front end for the transaction manager.
//!
//! Handlers never touch the manager. Requests and review decisions go into
//! ordered queues; a single tick applies queued decisions, runs
//! materialization, then takes in queued requests, and publishes the
//! resulting statuses to a table that the status endpoint reads.

use std::collections::{HashMap, VecDeque};
use std::env;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use isat_core::check::DependencyChecker;
use isat_core::manager::{
    AcceptAll, CommitSink, ReviewError, StrategyMode, TransactionManager, Verdict,
};
use isat_core::model::{CompletenessLevel, ModelError, Params, TransactionStatus, TxnId};
use isat_core::registry::TemplateRegistry;
use isat_core::{tpcc, InvariantDecl, Transaction};

#[derive(Clone, Debug, PartialEq)]
pub struct ServiceConfig {
    pub tick_interval: Duration,
    /// `None` takes the whole queue each tick.
    pub max_intake_per_tick: Option<usize>,
    pub strategy: StrategyMode,
    pub completeness: CompletenessLevel,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            tick_interval: Duration::from_millis(100),
            max_intake_per_tick: None,
            strategy: StrategyMode::BufferSuspicious,
            completeness: CompletenessLevel::CompleteQuery,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{name} must be a positive integer, got `{value}`")]
    NotPositive { name: &'static str, value: String },
    #[error(transparent)]
    Parse(#[from] ModelError),
}

fn positive(name: &'static str, value: String) -> Result<u64, ConfigError> {
    match value.parse::<u64>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(ConfigError::NotPositive { name, value }),
    }
}

impl ServiceConfig {
    /// Reads `SERVICE_TICK_MS`, `MAX_INTAKE_PER_TICK`, `STRATEGY` and
    /// `COMPLETENESS`, keeping defaults for unset variables.
    pub fn from_env() -> Result<Self, ConfigError> {
        let mut c = ServiceConfig::default();
        if let Ok(v) = env::var("SERVICE_TICK_MS") {
            c.tick_interval = Duration::from_millis(positive("SERVICE_TICK_MS", v)?);
        }
        if let Ok(v) = env::var("MAX_INTAKE_PER_TICK") {
            c.max_intake_per_tick = Some(positive("MAX_INTAKE_PER_TICK", v)? as usize);
        }
        if let Ok(v) = env::var("STRATEGY") {
            c.strategy = v.parse()?;
        }
        if let Ok(v) = env::var("COMPLETENESS") {
            c.completeness = v.parse()?;
        }
        Ok(c)
    }
}

/// What one tick did, in order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TickReport {
    pub reviews: Vec<(TxnId, Result<(), ReviewError>)>,
    pub materialized: Vec<(TxnId, TransactionStatus)>,
    pub admitted: Vec<(TxnId, TransactionStatus)>,
    pub queued_after: usize,
}

impl TickReport {
    pub fn is_empty(&self) -> bool {
        self.reviews.is_empty() && self.materialized.is_empty() && self.admitted.is_empty()
    }
}

struct Core {
    manager: TransactionManager,
    events_seen: usize,
}

struct Shared {
    config: ServiceConfig,
    templates: Arc<TemplateRegistry>,
    requests: Mutex<VecDeque<Transaction>>,
    decisions: Mutex<VecDeque<(TxnId, Verdict)>>,
    statuses: RwLock<HashMap<TxnId, TransactionStatus>>,
    next_seq: AtomicU64,
    core: Mutex<Core>,
}

/// Cheap to clone; all clones share one manager.
#[derive(Clone)]
pub struct Service {
    shared: Arc<Shared>,
}

#[derive(Debug, thiserror::Error)]
pub enum RequestError {
    #[error(transparent)]
    Template(#[from] isat_core::registry::TemplateError),
}

impl Service {
    pub fn new(
        config: ServiceConfig,
        templates: TemplateRegistry,
        invariants: Vec<InvariantDecl>,
        sink: Box<dyn CommitSink>,
    ) -> Self {
        let templates = Arc::new(templates);
        let manager = TransactionManager::new(
            DependencyChecker::new(invariants, config.completeness),
            config.strategy,
            Arc::clone(&templates),
            sink,
        );
        Service {
            shared: Arc::new(Shared {
                config,
                templates,
                requests: Mutex::new(VecDeque::new()),
                decisions: Mutex::new(VecDeque::new()),
                statuses: RwLock::new(HashMap::new()),
                next_seq: AtomicU64::new(1),
                core: Mutex::new(Core {
                    manager,
                    events_seen: 0,
                }),
            }),
        }
    }

    /// The TPC-C templates and invariants with an always-accepting sink.
    pub fn tpcc(config: ServiceConfig) -> Self {
        Service::new(
            config,
            tpcc::registry(),
            tpcc::invariants(),
            Box::new(AcceptAll::default()),
        )
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.shared.config
    }

    /// Builds the transaction, records it as submitted and queues it.
    pub fn submit(
        &self,
        template: &str,
        params: Params,
        suspicious: bool,
    ) -> Result<TxnId, RequestError> {
        let mut queue = self.shared.requests.lock().expect("request queue poisoned");
        // Ids and sequence numbers are drawn under the queue lock so that
        // queue order and arrival order agree.
        let seq = self.shared.next_seq.load(Ordering::Relaxed);
        let id = TxnId(format!("txn-{seq:06}"));
        let txn = self
            .shared
            .templates
            .instantiate(id.clone(), template, params, suspicious, seq)?;
        self.shared.next_seq.store(seq + 1, Ordering::Relaxed);
        self.shared
            .statuses
            .write()
            .expect("status table poisoned")
            .insert(id.clone(), TransactionStatus::Submitted);
        queue.push_back(txn);
        Ok(id)
    }

    pub fn review(&self, id: TxnId, verdict: Verdict) {
        self.shared
            .decisions
            .lock()
            .expect("decision buffer poisoned")
            .push_back((id, verdict));
    }

    pub fn status(&self, id: &TxnId) -> Option<TransactionStatus> {
        self.shared
            .statuses
            .read()
            .expect("status table poisoned")
            .get(id)
            .copied()
    }

    pub fn queued(&self) -> usize {
        self.shared.requests.lock().expect("request queue poisoned").len()
    }

    /// Decisions, then materialization, then intake.
    pub fn tick(&self) -> TickReport {
        let mut core = self.shared.core.lock().expect("manager poisoned");
        let mut report = TickReport::default();

        let decisions: Vec<_> = self
            .shared
            .decisions
            .lock()
            .expect("decision buffer poisoned")
            .drain(..)
            .collect();
        let mut retained = Vec::new();
        for (id, verdict) in decisions {
            // Still queued: keep the decision until the transaction is in.
            if core.manager.status_of(&id).is_none()
                && self.status(&id) == Some(TransactionStatus::Submitted)
            {
                retained.push((id, verdict));
                continue;
            }
            let outcome = core.manager.apply_review(&id, verdict);
            if let Err(e) = &outcome {
                log::info!("review of {id} ignored: {e}");
            }
            report.reviews.push((id, outcome));
        }

        report.materialized = core.manager.check_for_materialization();

        let batch: Vec<Transaction> = {
            let mut queue = self.shared.requests.lock().expect("request queue poisoned");
            let take = self
                .shared
                .config
                .max_intake_per_tick
                .map_or(queue.len(), |m| m.min(queue.len()));
            let batch = queue.drain(..take).collect();
            report.queued_after = queue.len();
            batch
        };
        for txn in batch {
            let id = txn.id.clone();
            match core.manager.process_transaction(txn) {
                Ok(status) => report.admitted.push((id, status)),
                Err(e) => log::error!("intake of {id} failed: {e}"),
            }
        }

        if !retained.is_empty() {
            let mut decisions = self.shared.decisions.lock().expect("decision buffer poisoned");
            for d in retained.into_iter().rev() {
                decisions.push_front(d);
            }
        }

        let mut statuses = self.shared.statuses.write().expect("status table poisoned");
        let seen = core.events_seen;
        for e in &core.manager.events()[seen..] {
            statuses.insert(e.id.clone(), e.to);
        }
        core.events_seen = core.manager.events().len();
        report
    }

    /// Ticks every `tick_interval` until the runtime shuts down.
    pub fn spawn_ticker(&self) -> tokio::task::JoinHandle<()> {
        let service = self.clone();
        tokio::spawn(async move {
            let mut interval = tokio::time::interval(service.config().tick_interval);
            interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
            loop {
                interval.tick().await;
                let s = service.clone();
                let report = tokio::task::spawn_blocking(move || s.tick())
                    .await
                    .expect("tick panicked");
                if !report.is_empty() {
                    log::debug!("{report:?}");
                }
            }
        })
    }
}

#[derive(Debug, Deserialize)]
pub struct RequestBody {
    pub transaction_name: String,
    #[serde(default)]
    pub transaction_parameters: Params,
    #[serde(default)]
    pub suspicious: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RequestReply {
    pub transaction_id: String,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Remove,
}

#[derive(Debug, Deserialize)]
pub struct ReviewBody {
    pub transaction_id: String,
    pub decision: Decision,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ReviewReply {
    pub status: String,
}

#[derive(Debug, Deserialize)]
pub struct StatusBody {
    pub transaction_id: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StatusReply {
    pub transaction_status: String,
}

pub enum ApiError {
    BadRequest(String),
    NotFound(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (code, kind, detail) = match self {
            ApiError::BadRequest(d) => (StatusCode::BAD_REQUEST, "bad_request", d),
            ApiError::NotFound(d) => (StatusCode::NOT_FOUND, "not_found", d),
        };
        let body = serde_json::json!({"error": kind, "detail": detail});
        (code, Json(body)).into_response()
    }
}

async fn transaction_request(
    State(service): State<Service>,
    Json(body): Json<RequestBody>,
) -> Result<Json<RequestReply>, ApiError> {
    let id = service
        .submit(&body.transaction_name, body.transaction_parameters, body.suspicious)
        .map_err(|e| ApiError::BadRequest(e.to_string()))?;
    Ok(Json(RequestReply {
        transaction_id: id.0,
    }))
}

async fn transaction_review(
    State(service): State<Service>,
    Json(body): Json<ReviewBody>,
) -> Json<ReviewReply> {
    let verdict = match body.decision {
        Decision::Accept => Verdict::Accept,
        Decision::Remove => Verdict::Remove,
    };
    service.review(TxnId(body.transaction_id), verdict);
    Json(ReviewReply {
        status: "received".into(),
    })
}

async fn transaction_status(
    State(service): State<Service>,
    Json(body): Json<StatusBody>,
) -> Result<Json<StatusReply>, ApiError> {
    let id = TxnId(body.transaction_id);
    match service.status(&id) {
        Some(s) => Ok(Json(StatusReply {
            transaction_status: s.as_str().into(),
        })),
        None => Err(ApiError::NotFound(format!("no transaction {id}"))),
    }
}

pub fn router(service: Service) -> Router {
    Router::new()
        .route("/transaction_request", post(transaction_request))
        .route("/transaction_review", post(transaction_review))
        .route("/transaction_status", post(transaction_status))
        .with_state(service)
}
