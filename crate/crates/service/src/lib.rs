//! HTTP front end for interactive relevance-feedback sessions.
//!
//! Endpoints (JSON in, JSON out; errors are `{code, message}`):
//!
//! | method | path                          | purpose                              |
//! |--------|-------------------------------|--------------------------------------|
//! | POST   | `/sessions`                   | start a session from an item or vector |
//! | GET    | `/sessions/{id}/results?k=`   | top of the current ranking           |
//! | POST   | `/sessions/{id}/feedback`     | record relevant / irrelevant labels  |
//! | POST   | `/sessions/{id}/refine`       | refit on all labels and re-rank      |
//! | GET    | `/sessions/{id}/history`      | per-iteration digests and rank paths |
//! | GET    | `/corpus`                     | corpus summary                       |
//! | GET    | `/corpus/items/{id}`          | item metadata                        |
//!
//! The corpus and checkpoint are shared read-only. Each session sits behind
//! its own mutex, so feedback and refine calls on one session never
//! interleave while distinct sessions proceed in parallel.

pub mod api;
pub mod error;

use std::collections::HashMap;
use std::future::Future;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path as UrlPath, Query as UrlQuery, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use hyperclass::feature_store::FeatureCorpus;
use hyperclass::hyperclass::HyperClassParams;
use hyperclass::session::{Method, Query, RetrievalSession, SessionConfig};
use serde_json::Value;
use tower_http::cors::CorsLayer;

use api::*;
pub use error::{ApiError, ErrorBody};

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Defaults for new sessions; requests may override any field.
    pub session: SessionConfig,
    pub scope: Scope,
    /// Base URL that item `display_path`s are resolved against.
    pub assets_base: Option<String>,
    /// Result count when a request does not give `k`.
    pub default_k: usize,
    /// Allow cross-origin browser clients.
    pub cors: bool,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            session: SessionConfig::default(),
            scope: Scope::All,
            assets_base: None,
            default_k: 24,
            cors: true,
        }
    }
}

struct Entry {
    session: RetrievalSession,
    scope: Scope,
}

struct Inner {
    corpus: FeatureCorpus,
    params: Option<HyperClassParams>,
    cfg: ServiceConfig,
    sessions: RwLock<HashMap<String, Arc<Mutex<Entry>>>>,
    next_id: AtomicU64,
}

/// Shared service state; cheap to clone.
#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    pub fn new(corpus: FeatureCorpus, params: Option<HyperClassParams>, cfg: ServiceConfig) -> hyperclass::Result<Self> {
        if let Some(p) = &params {
            if p.dim != corpus.dim() {
                return Err(hyperclass::Error::DimensionMismatch {
                    expected: corpus.dim(),
                    actual: p.dim,
                });
            }
        }
        cfg.session.adapt.validate()?;
        Ok(Self(Arc::new(Inner {
            corpus,
            params,
            cfg,
            sessions: RwLock::new(HashMap::new()),
            next_id: AtomicU64::new(1),
        })))
    }

    pub fn session_count(&self) -> usize {
        self.0.sessions.read().map(|s| s.len()).unwrap_or(0)
    }

    /// Labels and history of every live session, for writing to disk.
    pub fn snapshot(&self) -> Value {
        let sessions = match self.0.sessions.read() {
            Ok(s) => s,
            Err(_) => return Value::Null,
        };
        let mut ids: Vec<&String> = sessions.keys().collect();
        ids.sort();
        let list: Vec<Value> = ids
            .into_iter()
            .filter_map(|id| {
                let entry = sessions[id].lock().ok()?;
                let s = &entry.session;
                Some(serde_json::json!({
                    "session_id": id,
                    "method": s.config().method,
                    "scope": entry.scope,
                    "query_id": s.query_item().map(|i| self.0.corpus.id(i)),
                    "labels": labeled_items(&self.0.corpus, s),
                    "history": history_view(&self.0.corpus, id, s),
                }))
            })
            .collect();
        serde_json::json!({ "sessions": list })
    }

    pub fn write_snapshot(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(&self.snapshot())?;
        std::fs::write(path, text)
    }

    fn session(&self, id: &str) -> ApiResult<Arc<Mutex<Entry>>> {
        self.0
            .sessions
            .read()
            .map_err(|_| poisoned())?
            .get(id)
            .cloned()
            .ok_or_else(|| hyperclass::Error::UnknownSession(id.to_string()).into())
    }

    fn index_of(&self, id: &str) -> ApiResult<usize> {
        self.0
            .corpus
            .index_of(id)
            .ok_or_else(|| hyperclass::Error::UnknownItem(id.to_string()).into())
    }
}

pub fn router(state: AppState) -> Router {
    let cors = state.0.cfg.cors;
    let app = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/results", get(results))
        .route("/sessions/{id}/feedback", post(feedback))
        .route("/sessions/{id}/refine", post(refine))
        .route("/sessions/{id}/history", get(history))
        .route("/corpus", get(corpus_info))
        .route("/corpus/items/{id}", get(item))
        .fallback(|| async { ApiError::not_found("not_found", "no such endpoint") })
        .with_state(state);
    if cors {
        app.layer(CorsLayer::permissive())
    } else {
        app
    }
}

/// Serve until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: AppState,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}

fn poisoned() -> ApiError {
    ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", "session state poisoned")
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> ApiResult<T> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ApiError::bad_request(e.body_text()))
}

fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, p) => *b = p,
    }
}

fn session_config(defaults: &SessionConfig, req: &CreateSessionRequest) -> ApiResult<SessionConfig> {
    let mut cfg = match &req.options {
        None => defaults.clone(),
        Some(opts) => {
            if !opts.is_object() {
                return Err(ApiError::bad_request("options must be a JSON object"));
            }
            let mut v = serde_json::to_value(defaults).map_err(hyperclass::Error::from)?;
            merge(&mut v, opts.clone());
            serde_json::from_value(v).map_err(|e| ApiError::bad_request(format!("options: {e}")))?
        }
    };
    if let Some(m) = req.method {
        cfg.method = m;
    }
    Ok(cfg)
}

fn resolve_asset(base: Option<&str>, path: &str) -> String {
    match base {
        Some(b) if !path.contains("://") => {
            format!("{}/{}", b.trim_end_matches('/'), path.trim_start_matches('/'))
        }
        _ => path.to_string(),
    }
}

fn labeled_items(corpus: &FeatureCorpus, s: &RetrievalSession) -> Vec<LabeledItem> {
    s.labeled()
        .map(|(i, relevant)| LabeledItem {
            id: corpus.id(i).to_string(),
            relevant,
        })
        .collect()
}

fn session_view(inner: &Inner, id: &str, entry: &Entry, k: usize) -> SessionView {
    let s = &entry.session;
    let corpus = &inner.corpus;
    let labels: HashMap<usize, bool> = s.labeled().collect();
    let results = s
        .top(k)
        .into_iter()
        .enumerate()
        .map(|(r, item)| ResultItem {
            rank: r + 1,
            id: corpus.id(item.index).to_string(),
            score: item.score,
            label: labels.get(&item.index).copied(),
            display_path: corpus.display_path(item.index).map(str::to_string),
        })
        .collect();
    let latest = s.latest();
    SessionView {
        session_id: id.to_string(),
        method: s.config().method,
        scope: entry.scope,
        iteration: s.iteration(),
        query_id: s.query_item().map(|i| corpus.id(i).to_string()),
        total: s.scope().len(),
        labeled: labeled_items(corpus, s),
        results,
        average_precision: latest.average_precision,
        precision_at_k: latest.precision_at_k,
    }
}

fn history_view(corpus: &FeatureCorpus, id: &str, s: &RetrievalSession) -> HistoryView {
    let snapshots = s
        .history()
        .iter()
        .map(|snap| SnapshotView {
            iteration: snap.iteration,
            labeled: snap.labeled,
            top: snap
                .top
                .iter()
                .map(|t| DigestEntry {
                    id: corpus.id(t.index).to_string(),
                    score: t.score,
                })
                .collect(),
            average_precision: snap.average_precision,
            precision_at_k: snap.precision_at_k,
        })
        .collect();
    let trajectories = s
        .rank_trajectories()
        .into_iter()
        .map(|(i, pts)| {
            let pts = pts
                .into_iter()
                .map(|(iteration, rank)| RankPoint { iteration, rank })
                .collect();
            (corpus.id(i).to_string(), pts)
        })
        .collect();
    HistoryView {
        session_id: id.to_string(),
        iteration: s.iteration(),
        digest_k: s.config().digest_k,
        snapshots,
        trajectories,
    }
}

async fn create_session(
    State(state): State<AppState>,
    payload: Result<Json<CreateSessionRequest>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<SessionView>)> {
    let req = body(payload)?;
    let cfg = session_config(&state.0.cfg.session, &req)?;
    if cfg.method == Method::Hc && state.0.params.is_none() {
        return Err(hyperclass::Error::InvalidConfig(
            "the hc method needs a checkpoint; start the service with one or pick another method".into(),
        )
        .into());
    }
    let query = match (&req.query_id, &req.query_vector) {
        (Some(id), None) => Query::Item(state.index_of(id)?),
        (None, Some(v)) => Query::Vector(v.clone()),
        _ => return Err(ApiError::bad_request("give exactly one of query_id and query_vector")),
    };
    let scope = req.scope.unwrap_or(state.0.cfg.scope);
    let k = req.k.unwrap_or(state.0.cfg.default_k);
    let st = state.clone();
    let (id, view) = tokio::task::spawn_blocking(move || -> ApiResult<(String, SessionView)> {
        let inner = &st.0;
        let rows = match scope.split() {
            Some(split) => inner.corpus.split_indices(split),
            None => (0..inner.corpus.len()).collect(),
        };
        let session = RetrievalSession::new(&inner.corpus, rows, query, cfg, None)?;
        let n = inner.next_id.fetch_add(1, Ordering::Relaxed);
        let id = format!("s{n}");
        let entry = Entry { session, scope };
        let view = session_view(inner, &id, &entry, k);
        inner
            .sessions
            .write()
            .map_err(|_| poisoned())?
            .insert(id.clone(), Arc::new(Mutex::new(entry)));
        Ok((id, view))
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    tracing::info!(session = %id, "session created");
    Ok((StatusCode::CREATED, Json(view)))
}

async fn results(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    q: Result<UrlQuery<ResultsQuery>, QueryRejection>,
) -> ApiResult<Json<SessionView>> {
    let q = q.map_err(|e| ApiError::bad_request(e.body_text()))?.0;
    let entry = state.session(&id)?;
    let entry = entry.lock().map_err(|_| poisoned())?;
    let k = q.k.unwrap_or(state.0.cfg.default_k);
    Ok(Json(session_view(&state.0, &id, &entry, k)))
}

async fn feedback(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    payload: Result<Json<FeedbackRequest>, JsonRejection>,
) -> ApiResult<Json<FeedbackResponse>> {
    let entry = state.session(&id)?;
    let req = body(payload)?;
    let labels = req
        .labels
        .iter()
        .map(|l| Ok((state.index_of(&l.id)?, l.relevant)))
        .collect::<ApiResult<Vec<_>>>()?;
    let mut entry = entry.lock().map_err(|_| poisoned())?;
    let labeled_count = entry.session.submit_feedback(&state.0.corpus, &labels)?;
    Ok(Json(FeedbackResponse {
        session_id: id,
        accepted: labels.len(),
        labeled_count,
    }))
}

async fn refine(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    q: Result<UrlQuery<ResultsQuery>, QueryRejection>,
) -> ApiResult<Json<SessionView>> {
    let q = q.map_err(|e| ApiError::bad_request(e.body_text()))?.0;
    let entry = state.session(&id)?;
    let st = state.clone();
    let view = tokio::task::spawn_blocking(move || -> ApiResult<SessionView> {
        let inner = &st.0;
        let mut entry = entry.lock().map_err(|_| poisoned())?;
        entry.session.refine(&inner.corpus, inner.params.as_ref())?;
        Ok(session_view(inner, &id, &entry, q.k.unwrap_or(inner.cfg.default_k)))
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    Ok(Json(view))
}

async fn history(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<HistoryView>> {
    let entry = state.session(&id)?;
    let entry = entry.lock().map_err(|_| poisoned())?;
    Ok(Json(history_view(&state.0.corpus, &id, &entry.session)))
}

async fn corpus_info(State(state): State<AppState>) -> Json<CorpusView> {
    let c = &state.0.corpus;
    Json(CorpusView {
        dim: c.dim(),
        count: c.len(),
        normalized: c.is_normalized(),
        default_method: state.0.cfg.session.method,
        checkpoint_loaded: state.0.params.is_some(),
    })
}

async fn item(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<ItemView>> {
    let i = state.index_of(&id)?;
    let c = &state.0.corpus;
    let display_path = c.display_path(i).map(str::to_string);
    let asset_url = display_path
        .as_deref()
        .map(|p| resolve_asset(state.0.cfg.assets_base.as_deref(), p));
    Ok(Json(ItemView {
        id,
        index: i,
        class_label: c.class_label(i),
        split: c.split(i).as_str().to_string(),
        display_path,
        asset_url,
    }))
}
