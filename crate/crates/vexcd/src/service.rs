//! HTTP/JSON service that lets a labeling UI drive sessions.
//!
//! Pairs are addressed by their dataset ids everywhere in the API. A
//! session with a display pending answers `POST /display` with that same
//! display again, so a UI can reload without breaking the protocol.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use uuid::Uuid;
use vexcd_core::{EvalRecord, ExemplarState, PatchPairDataset, PreparedData, Session, SessionConfig, Strategy};

use crate::bench::monotonic_seconds;
use crate::error::Result;
use crate::manifest::encode_png;
use crate::persist::{log_to_string, read_log_file, IdMap};

pub struct ApiSession {
    pub session: Session,
    pub created: u64,
    pub updated: u64,
}

pub struct AppState {
    dataset: Arc<PatchPairDataset>,
    data: Arc<PreparedData>,
    ids: IdMap,
    defaults: SessionConfig,
    store: Option<PathBuf>,
    sessions: RwLock<HashMap<Uuid, Arc<Mutex<ApiSession>>>>,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl AppState {
    /// Builds the service state. With a store directory, every session's
    /// event log is written there and logs found at startup are replayed.
    pub fn new(dataset: PatchPairDataset, defaults: SessionConfig, store: Option<PathBuf>) -> Result<Arc<Self>> {
        let data = Arc::new(PreparedData::from_dataset(&dataset)?);
        let state = Arc::new(Self {
            ids: IdMap::new(&data),
            dataset: Arc::new(dataset),
            data,
            defaults,
            store,
            sessions: RwLock::new(HashMap::new()),
        });
        if let Some(dir) = &state.store {
            fs::create_dir_all(dir).map_err(|e| crate::error::Error::io(dir, e))?;
            state.restore(dir)?;
        }
        Ok(state)
    }

    fn restore(&self, dir: &Path) -> Result<()> {
        let entries = fs::read_dir(dir).map_err(|e| crate::error::Error::io(dir, e))?;
        for entry in entries.flatten() {
            let path = entry.path();
            if path.extension().is_none_or(|e| e != "jsonl") {
                continue;
            }
            let Some(id) = path
                .file_stem()
                .and_then(|s| s.to_str())
                .and_then(|s| Uuid::parse_str(s).ok())
            else {
                continue;
            };
            let replayed = read_log_file(&path)
                .and_then(|log| self.ids.from_log(&log))
                .and_then(|events| Ok(Session::replay(self.data.clone(), &events)?));
            match replayed {
                Ok(mut session) => {
                    session.set_clock(monotonic_seconds);
                    let now = unix_now();
                    self.sessions.write().expect("session map poisoned").insert(
                        id,
                        Arc::new(Mutex::new(ApiSession {
                            session,
                            created: now,
                            updated: now,
                        })),
                    );
                    log::info!("restored session {id}");
                }
                Err(e) => log::warn!("skipping {}: {e}", path.display()),
            }
        }
        Ok(())
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().expect("session map poisoned").len()
    }

    fn get(&self, id: &str) -> std::result::Result<Arc<Mutex<ApiSession>>, ApiError> {
        let uuid = Uuid::parse_str(id).map_err(|_| ApiError::session_not_found(id))?;
        self.sessions
            .read()
            .expect("session map poisoned")
            .get(&uuid)
            .cloned()
            .ok_or_else(|| ApiError::session_not_found(id))
    }

    fn persist(&self, id: Uuid, session: &Session) -> std::result::Result<(), ApiError> {
        let Some(dir) = &self.store else {
            return Ok(());
        };
        let text = log_to_string(&self.ids.to_log(session.events())).map_err(ApiError::internal)?;
        let tmp = dir.join(format!("{id}.jsonl.tmp"));
        let path = dir.join(format!("{id}.jsonl"));
        fs::write(&tmp, text)
            .and_then(|_| fs::rename(&tmp, &path))
            .map_err(|e| ApiError::internal(crate::error::Error::io(&path, e)))
    }
}

/// JSON error body: `{code, message}` plus details for label mismatches.
#[derive(Debug, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    status: StatusCode,
    code: &'static str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    missing: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    unexpected: Option<Vec<usize>>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            missing: None,
            unexpected: None,
        }
    }

    fn session_not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "session_not_found", format!("no session `{id}`"))
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
    }
}

impl From<vexcd_core::Error> for ApiError {
    fn from(e: vexcd_core::Error) -> Self {
        use vexcd_core::Error as E;
        let (status, code) = match &e {
            E::Protocol(_) => (StatusCode::CONFLICT, "protocol_violation"),
            E::Exhausted => (StatusCode::CONFLICT, "pool_exhausted"),
            E::LabelMismatch { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "label_mismatch"),
            E::Domain(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_label"),
            E::Config(_) | E::Budget { .. } => (StatusCode::BAD_REQUEST, "invalid_config"),
            E::NonFinite(_) => (StatusCode::INTERNAL_SERVER_ERROR, "numeric_failure"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        Self::new(status, code, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

type ApiResult<T> = std::result::Result<T, ApiError>;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    pub strategy: Option<Strategy>,
    /// Partial session config; missing fields take the service defaults.
    pub config: Option<serde_json::Value>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionSummary {
    pub id: String,
    pub strategy: Strategy,
    pub iteration: usize,
    pub iterations: usize,
    pub batch: usize,
    pub labeled: usize,
    pub positives: usize,
    pub pool: usize,
    pub pending: Vec<usize>,
    pub finished: bool,
    pub history: Vec<EvalRecord>,
    pub created: u64,
    pub updated: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DisplayItem {
    pub pair_id: usize,
    pub p: String,
    pub q: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DisplayResponse {
    pub iteration: usize,
    pub items: Vec<DisplayItem>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelsRequest {
    pub labels: BTreeMap<usize, u8>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LabelsResponse {
    pub iteration: usize,
    pub record: EvalRecord,
    pub finished: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ExemplarsResponse {
    pub iteration: usize,
    /// Absent until a virtual-exemplar display has been computed.
    pub exemplars: Option<ExemplarState>,
}

fn summary(state: &AppState, id: &str, api: &ApiSession) -> SessionSummary {
    let s = &api.session;
    SessionSummary {
        id: id.to_string(),
        strategy: s.config().strategy,
        iteration: s.iteration(),
        iterations: s.config().iterations,
        batch: s.config().batch,
        labeled: s.labeled().len(),
        positives: s.labeled().values().filter(|&&y| y == 1).count(),
        pool: s.pool().len(),
        pending: s.pending().iter().map(|&i| state.ids.id(i)).collect(),
        finished: s.is_finished(),
        history: s.history().to_vec(),
        created: api.created,
        updated: api.updated,
    }
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    body: std::result::Result<Json<CreateRequest>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<SessionSummary>)> {
    let Json(req) = body?;
    let mut config = match req.config {
        Some(partial) => {
            let mut base = serde_json::to_value(&state.defaults).map_err(ApiError::internal)?;
            merge(&mut base, partial);
            serde_json::from_value::<SessionConfig>(base)
                .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_config", e.to_string()))?
        }
        None => state.defaults.clone(),
    };
    if let Some(s) = req.strategy {
        config.strategy = s;
    }
    let data = state.data.clone();
    let mut session = tokio::task::spawn_blocking(move || Session::init(data, config))
        .await
        .map_err(ApiError::internal)??;
    session.set_clock(monotonic_seconds);
    let id = Uuid::new_v4();
    state.persist(id, &session)?;
    let now = unix_now();
    let api = ApiSession {
        session,
        created: now,
        updated: now,
    };
    let body = summary(&state, &id.to_string(), &api);
    state
        .sessions
        .write()
        .expect("session map poisoned")
        .insert(id, Arc::new(Mutex::new(api)));
    Ok((StatusCode::CREATED, Json(body)))
}

/// Overlays the fields of `patch` onto `base`, recursing into objects.
fn merge(base: &mut serde_json::Value, patch: serde_json::Value) {
    match (base, patch) {
        (serde_json::Value::Object(b), serde_json::Value::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k).or_insert(serde_json::Value::Null), v);
            }
        }
        (slot, v) => *slot = v,
    }
}

async fn get_session(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Json<SessionSummary>> {
    let handle = state.get(&id)?;
    let api = handle.lock().expect("session poisoned");
    Ok(Json(summary(&state, &id, &api)))
}

fn display_items(state: &AppState, positions: &[usize]) -> Vec<DisplayItem> {
    positions
        .iter()
        .map(|&i| {
            let pair_id = state.ids.id(i);
            DisplayItem {
                pair_id,
                p: format!("/patches/{pair_id}/t0"),
                q: format!("/patches/{pair_id}/t1"),
            }
        })
        .collect()
}

async fn next_display(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Json<DisplayResponse>> {
    let handle = state.get(&id)?;
    let worker = state.clone();
    tokio::task::spawn_blocking(move || {
        let mut api = handle.lock().expect("session poisoned");
        if api.session.pending().is_empty() {
            if api.session.is_finished() {
                return Err(ApiError::new(
                    StatusCode::CONFLICT,
                    "session_finished",
                    "the session has no iterations left",
                ));
            }
            api.session.next_display()?;
            api.updated = unix_now();
            let uuid = Uuid::parse_str(&id).expect("looked up by uuid");
            worker.persist(uuid, &api.session)?;
        }
        Ok(Json(DisplayResponse {
            iteration: api.session.iteration(),
            items: display_items(&worker, api.session.pending()),
        }))
    })
    .await
    .map_err(ApiError::internal)?
}

async fn submit_labels(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: std::result::Result<Json<LabelsRequest>, JsonRejection>,
) -> ApiResult<Json<LabelsResponse>> {
    let handle = state.get(&id)?;
    let Json(req) = body?;
    let worker = state.clone();
    tokio::task::spawn_blocking(move || {
        let mut api = handle.lock().expect("session poisoned");
        if api.session.pending().is_empty() {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "protocol_violation",
                "no display is pending; request one first",
            ));
        }
        let pending: Vec<usize> = api.session.pending().iter().map(|&i| worker.ids.id(i)).collect();
        let missing: Vec<usize> = pending
            .iter()
            .filter(|p| !req.labels.contains_key(p))
            .copied()
            .collect();
        let unexpected: Vec<usize> = req.labels.keys().filter(|k| !pending.contains(k)).copied().collect();
        if !missing.is_empty() || !unexpected.is_empty() {
            let mut err = ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "label_mismatch",
                format!(
                    "labels must cover exactly the pending display (missing {missing:?}, unexpected {unexpected:?})"
                ),
            );
            err.missing = Some(missing);
            err.unexpected = Some(unexpected);
            return Err(err);
        }
        let labels: BTreeMap<usize, u8> = req
            .labels
            .iter()
            .map(|(&pair, &y)| (worker.ids.position(pair).expect("pending pairs exist"), y))
            .collect();
        let record = api.session.submit_labels(&labels)?.clone();
        api.updated = unix_now();
        let uuid = Uuid::parse_str(&id).expect("looked up by uuid");
        worker.persist(uuid, &api.session)?;
        Ok(Json(LabelsResponse {
            iteration: api.session.iteration(),
            record,
            finished: api.session.is_finished(),
        }))
    })
    .await
    .map_err(ApiError::internal)?
}

async fn get_exemplars(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Json<ExemplarsResponse>> {
    let handle = state.get(&id)?;
    let api = handle.lock().expect("session poisoned");
    Ok(Json(ExemplarsResponse {
        iteration: api.session.iteration(),
        exemplars: api.session.exemplars().cloned(),
    }))
}

async fn export_log(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    let handle = state.get(&id)?;
    let text = {
        let api = handle.lock().expect("session poisoned");
        log_to_string(&state.ids.to_log(api.session.events())).map_err(ApiError::internal)?
    };
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], text).into_response())
}

async fn get_patch(
    State(state): State<Arc<AppState>>,
    UrlPath((pair_id, instant)): UrlPath<(String, String)>,
) -> ApiResult<Response> {
    let not_found = || ApiError::new(StatusCode::NOT_FOUND, "pair_not_found", format!("no pair `{pair_id}`"));
    let pos = pair_id
        .parse::<usize>()
        .ok()
        .and_then(|p| state.ids.position(p))
        .ok_or_else(not_found)?;
    let pair = &state.dataset.pairs[pos];
    let patch = match instant.as_str() {
        "t0" => &pair.p,
        "t1" => &pair.q,
        other => {
            return Err(ApiError::new(
                StatusCode::NOT_FOUND,
                "bad_instant",
                format!("instant must be t0 or t1, got `{other}`"),
            ))
        }
    };
    let png = encode_png(patch).map_err(ApiError::internal)?;
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

async fn fallback() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/display", post(next_display))
        .route("/sessions/{id}/labels", post(submit_labels))
        .route("/sessions/{id}/exemplars", get(get_exemplars))
        .route("/sessions/{id}/export", get(export_log))
        .route("/patches/{pair_id}/{instant}", get(get_patch))
        .fallback(fallback)
        .with_state(state)
}

pub async fn serve(state: Arc<AppState>, addr: SocketAddr) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| crate::error::Error::io(addr.to_string(), e))?;
    log::info!(
        "listening on {}",
        listener.local_addr().map(|a| a.to_string()).unwrap_or_default()
    );
    axum::serve(listener, router(state))
        .await
        .map_err(|e| crate::error::Error::io("<server>", e))
}
