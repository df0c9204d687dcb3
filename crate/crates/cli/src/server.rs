//! HTTP service exposing environment sessions.
//!
//! Routes:
//!
//! | method | path | body |
//! |---|---|---|
//! | POST | `/sessions` | episode request |
//! | GET | `/sessions/{id}/observation?mode=json\|axtree\|html` | |
//! | POST | `/sessions/{id}/actions` | `{"action": "..."}` |
//! | GET | `/sessions/{id}/state` | canonical YAML |
//! | GET | `/sessions/{id}/result` | |
//! | DELETE | `/sessions/{id}` | |
//! | GET | `/meta/tasks`, `/meta/variations`, `/meta/actions?profile=` | |
//!
//! Observations in JSON bodies leave out `html` unless `?html=true`.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use varapps::action::{action_signatures, ActionProfile, Signature};
use varapps::config::Catalog;
use varapps::env::{EnvError, Episode, EpisodeRequest};
use varapps::layout::Observation;
use varapps::tasks::TaskCatalog;

use crate::protocol::*;

/// Shared server state: catalogs, defaults and live sessions.
pub struct AppState {
    catalog: Catalog,
    tasks: TaskCatalog,
    default_horizon: usize,
    sessions: RwLock<HashMap<String, Arc<Mutex<Episode>>>>,
}

impl AppState {
    pub fn new(catalog: Catalog, tasks: TaskCatalog, default_horizon: usize) -> Self {
        AppState { catalog, tasks, default_horizon, sessions: RwLock::new(HashMap::new()) }
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().expect("session map").len()
    }
}

impl Default for AppState {
    fn default() -> Self {
        AppState::new(Catalog::all(), TaskCatalog::shipped(), varapps::tasks::DEFAULT_HORIZON)
    }
}

type Shared = Arc<AppState>;

pub struct ApiError {
    status: StatusCode,
    code: String,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError { status, code: code.into(), message: message.into() }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid_request", message)
    }

    fn no_session(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session `{id}`"))
    }
}

impl From<EnvError> for ApiError {
    fn from(e: EnvError) -> Self {
        let status = match e {
            EnvError::Terminal(_) => StatusCode::CONFLICT,
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            protocol_version: PROTOCOL_VERSION,
            error: ErrorDetail { code: self.code, message: self.message },
        };
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", axum::routing::delete(delete_session))
        .route("/sessions/{id}/observation", get(observation))
        .route("/sessions/{id}/actions", post(act))
        .route("/sessions/{id}/state", get(session_state))
        .route("/sessions/{id}/result", get(result))
        .route("/meta/tasks", get(meta_tasks))
        .route("/meta/variations", get(meta_variations))
        .route("/meta/actions", get(meta_actions))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route") })
        .with_state(state)
}

fn json(body: &str) -> ApiResult<Value> {
    serde_json::from_str(body).map_err(|e| ApiError::bad_request(format!("body is not JSON: {e}")))
}

/// Decode a JSON body, rejecting unknown or mismatched protocol versions.
fn decode<T: serde::de::DeserializeOwned>(mut v: Value) -> ApiResult<T> {
    let obj = v.as_object_mut().ok_or_else(|| ApiError::bad_request("body must be a JSON object"))?;
    if let Some(pv) = obj.remove("protocol_version") {
        if pv.as_u64() != Some(PROTOCOL_VERSION as u64) {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "unsupported_protocol",
                format!("protocol_version {pv} is not supported (expected {PROTOCOL_VERSION})"),
            ));
        }
    }
    serde_json::from_value(v).map_err(|e| ApiError::bad_request(e.to_string()))
}

#[derive(Debug, Default, Deserialize)]
struct HtmlQuery {
    #[serde(default)]
    html: bool,
}

fn trim(mut obs: Observation, html: bool) -> Observation {
    if !html {
        obs.html.clear();
    }
    obs
}

fn session(state: &AppState, id: &str) -> ApiResult<Arc<Mutex<Episode>>> {
    state.sessions.read().expect("session map").get(id).cloned().ok_or_else(|| ApiError::no_session(id))
}

fn lock(ep: &Mutex<Episode>) -> std::sync::MutexGuard<'_, Episode> {
    // a panic inside one action must not wedge the session forever
    ep.lock().unwrap_or_else(|p| p.into_inner())
}

async fn create_session(
    State(state): State<Shared>,
    Query(q): Query<HtmlQuery>,
    body: String,
) -> ApiResult<(StatusCode, Json<SessionCreated>)> {
    let mut v = json(&body)?;
    if let Some(obj) = v.as_object_mut() {
        obj.entry("horizon").or_insert(state.default_horizon.into());
    }
    let req: EpisodeRequest = decode(v)?;
    let ep = Episode::new(req, &state.catalog, &state.tasks)?;
    let id = uuid::Uuid::new_v4().to_string();
    let created = SessionCreated {
        protocol_version: PROTOCOL_VERSION,
        session_id: id.clone(),
        goal: ep.goal().to_string(),
        status: ep.status(),
        horizon: ep.request().horizon,
        digest: ep.digest(),
        observation: trim(ep.observation().clone(), q.html),
    };
    state.sessions.write().expect("session map").insert(id, Arc::new(Mutex::new(ep)));
    Ok((StatusCode::CREATED, Json(created)))
}

#[derive(Debug, Deserialize)]
struct ObservationQuery {
    #[serde(default)]
    mode: Option<String>,
    #[serde(default)]
    html: bool,
}

async fn observation(
    State(state): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<ObservationQuery>,
) -> ApiResult<Response> {
    let ep = session(&state, &id)?;
    let obs = lock(&ep).observation().clone();
    Ok(match q.mode.as_deref().unwrap_or("json") {
        "json" => Json(ObservationResponse {
            protocol_version: PROTOCOL_VERSION,
            session_id: id,
            observation: trim(obs, q.html),
        })
        .into_response(),
        "axtree" => ([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], obs.ax_tree).into_response(),
        "html" => ([(header::CONTENT_TYPE, "text/html; charset=utf-8")], obs.html).into_response(),
        other => return Err(ApiError::bad_request(format!("unknown mode `{other}` (json, axtree or html)"))),
    })
}

async fn act(
    State(state): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<HtmlQuery>,
    body: String,
) -> ApiResult<Json<ActResponse>> {
    let ep = session(&state, &id)?;
    let req: ActRequest = decode(json(&body)?)?;
    let mut ep = lock(&ep);
    let result = ep.act(&req.action)?;
    Ok(Json(ActResponse {
        protocol_version: PROTOCOL_VERSION,
        session_id: id,
        result,
        observation: trim(ep.observation().clone(), q.html),
    }))
}

async fn session_state(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    let ep = session(&state, &id)?;
    let yaml = lock(&ep).state_yaml();
    Ok(([(header::CONTENT_TYPE, "application/yaml; charset=utf-8")], yaml).into_response())
}

async fn result(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<ResultResponse>> {
    let ep = session(&state, &id)?;
    let result = lock(&ep).result();
    Ok(Json(ResultResponse { protocol_version: PROTOCOL_VERSION, session_id: id, result }))
}

async fn delete_session(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    match state.sessions.write().expect("session map").remove(&id) {
        Some(_) => Ok(StatusCode::NO_CONTENT),
        None => Err(ApiError::no_session(&id)),
    }
}

async fn meta_tasks(State(state): State<Shared>) -> Json<TasksResponse> {
    let tasks = state
        .tasks
        .tasks()
        .iter()
        .map(|t| TaskInfo {
            id: t.id.clone(),
            relevant_apps: t.relevant_apps.clone(),
            prompts: t.goal_prompts.len(),
            multi_step: t.is_multi_step(),
        })
        .collect();
    Json(TasksResponse { protocol_version: PROTOCOL_VERSION, tasks })
}

async fn meta_variations(State(state): State<Shared>) -> Json<VariationsResponse> {
    let variations = state
        .catalog
        .variations
        .iter()
        .map(|v| VariationInfo {
            id: v.id.clone(),
            kind: serde_json::to_value(v.kind).ok().and_then(|k| k.as_str().map(str::to_string)).unwrap_or_default(),
            axis: v.axis.clone(),
        })
        .collect();
    Json(VariationsResponse { protocol_version: PROTOCOL_VERSION, variations })
}

#[derive(Debug, Deserialize)]
struct ProfileQuery {
    #[serde(default)]
    profile: Option<String>,
}

#[derive(Serialize)]
struct ActionsResponse {
    protocol_version: u32,
    profile: ActionProfile,
    actions: Vec<Signature>,
}

async fn meta_actions(Query(q): Query<ProfileQuery>) -> ApiResult<Response> {
    let profile: ActionProfile = match q.profile.as_deref() {
        None => ActionProfile::Full,
        Some(p) => p.parse().map_err(|e: String| ApiError::new(StatusCode::BAD_REQUEST, "unknown_profile", e))?,
    };
    let body = ActionsResponse { protocol_version: PROTOCOL_VERSION, profile, actions: action_signatures(profile) };
    Ok(Json(body).into_response())
}

/// Serve until the process is interrupted.
pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("varapps listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(state)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// A server on a background thread with its own runtime. Dropping the handle
/// stops it.
pub struct Background {
    pub addr: SocketAddr,
    pub state: Shared,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl Background {
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for Background {
    fn drop(&mut self) {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Start a server on `127.0.0.1` with an ephemeral port.
pub fn spawn_background(state: AppState) -> std::io::Result<Background> {
    let std_listener = std::net::TcpListener::bind("127.0.0.1:0")?;
    std_listener.set_nonblocking(true)?;
    let addr = std_listener.local_addr()?;
    let shared = Arc::new(state);
    let app = router(shared.clone());
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let thread = std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build().expect("runtime");
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(std_listener).expect("listener");
            let _ = axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await;
        });
    });
    Ok(Background { addr, state: shared, stop: Some(tx), thread: Some(thread) })
}
