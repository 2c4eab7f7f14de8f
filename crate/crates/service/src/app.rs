//! Routes, shared state and per-session locking.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use corrlearn::KernelKind;
use serde::de::DeserializeOwned;
use serde::Serialize;
use tokio::sync::RwLock;
use tower_http::services::ServeDir;

use crate::config::ServiceConfig;
use crate::error::ApiError;
use crate::replay::LoggedRequest;
use crate::session::{CorrectionRequest, CreateSession, PreviewRequest, Session};

/// Sigma values offered by `GET /kernels`.
pub const SIGMA_PRESETS: [f64; 3] = [1.0, 3.0, 5.0];

struct Entry {
    session: Session,
    /// Every state-changing request this session received, in the order applied.
    log: Vec<LoggedRequest>,
}

#[derive(Default)]
struct Registry {
    issued: u64,
    sessions: BTreeMap<String, Arc<RwLock<Entry>>>,
}

/// Shared service state. Cloning is cheap.
#[derive(Clone)]
pub struct AppState {
    config: Arc<ServiceConfig>,
    registry: Arc<Mutex<Registry>>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        Self {
            config: Arc::new(config),
            registry: Arc::default(),
        }
    }

    fn lookup(&self, id: &str) -> Result<Arc<RwLock<Entry>>, ApiError> {
        self.registry
            .lock()
            .unwrap()
            .sessions
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(id))
    }

    fn all(&self) -> Vec<Arc<RwLock<Entry>>> {
        self.registry.lock().unwrap().sessions.values().cloned().collect()
    }
}

pub fn router(config: ServiceConfig) -> Router {
    let static_dir = config.static_dir.clone();
    let app = Router::new()
        .route("/kernels", get(kernels))
        .route("/log", get(full_log))
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(show))
        .route("/sessions/{id}/preview", post(preview))
        .route("/sessions/{id}/corrections", post(commit))
        .route("/sessions/{id}/trace", get(trace))
        .route("/sessions/{id}/log", get(session_log))
        .route("/sessions/{id}/finish", post(finish));
    let app = match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.fallback(not_found),
    };
    app.with_state(AppState::new(config))
}

/// JSON body with floats written at full precision.
pub(crate) fn json_response<T: Serialize>(status: StatusCode, value: &T) -> Response {
    (
        status,
        [(header::CONTENT_TYPE, "application/json")],
        corrlearn::io::to_json_string(value),
    )
        .into_response()
}

fn jsonl_response(text: String) -> Response {
    ([(header::CONTENT_TYPE, "application/x-ndjson")], text).into_response()
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request("malformed_request", e.to_string()))
}

fn body_value(body: &Bytes) -> serde_json::Value {
    serde_json::from_slice(body).unwrap_or(serde_json::Value::Null)
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}

#[derive(Serialize)]
struct KernelList {
    variants: [&'static str; 3],
    sigma_presets: [f64; 3],
    kernels: Vec<KernelKind>,
}

async fn kernels() -> Response {
    let mut kernels = vec![KernelKind::Identity, KernelKind::Velocity];
    kernels.extend(SIGMA_PRESETS.map(|sigma| KernelKind::Rbf { sigma }));
    json_response(
        StatusCode::OK,
        &KernelList {
            variants: ["identity", "velocity", "rbf"],
            sigma_presets: SIGMA_PRESETS,
            kernels,
        },
    )
}

async fn create(State(app): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: CreateSession = parse(&body)?;
    let config = app.config.clone();
    let mut session = blocking(move || Session::create(String::new(), req, &config)).await??;
    let logged = LoggedRequest::post("/sessions", body_value(&body));
    let view = {
        let mut registry = app.registry.lock().unwrap();
        registry.issued += 1;
        let id = format!("s{:06}", registry.issued);
        session.set_id(id.clone());
        let view = session.view()?;
        let entry = Entry {
            session,
            log: vec![logged],
        };
        registry.sessions.insert(id, Arc::new(RwLock::new(entry)));
        view
    };
    Ok(json_response(StatusCode::CREATED, &view))
}

async fn show(State(app): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let entry = app.lookup(&id)?;
    let guard = entry.read().await;
    Ok(json_response(StatusCode::OK, &guard.session.view()?))
}

async fn preview(State(app): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let entry = app.lookup(&id)?;
    let req: PreviewRequest = parse(&body)?;
    let guard = entry.read().await;
    Ok(json_response(StatusCode::OK, &guard.session.preview(req)?))
}

async fn commit(State(app): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let entry = app.lookup(&id)?;
    let req: CorrectionRequest = parse(&body)?;
    let logged = LoggedRequest::post(format!("/sessions/{id}/corrections"), body_value(&body));
    let mut guard = entry.write_owned().await;
    let response = blocking(move || {
        guard.log.push(logged);
        guard.session.commit(req)
    })
    .await??;
    Ok(json_response(StatusCode::OK, &response))
}

async fn trace(State(app): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let entry = app.lookup(&id)?;
    let guard = entry.read().await;
    Ok(jsonl_response(guard.session.trace().to_jsonl()))
}

async fn finish(State(app): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let entry = app.lookup(&id)?;
    if !body.iter().all(u8::is_ascii_whitespace) {
        parse::<serde_json::Map<String, serde_json::Value>>(&body)?;
    }
    let mut guard = entry.write().await;
    guard
        .log
        .push(LoggedRequest::post(format!("/sessions/{id}/finish"), body_value(&body)));
    guard.session.finish();
    let trace_file = match &app.config.trace_dir {
        None => None,
        Some(dir) => {
            let path = dir.join(format!("{id}.jsonl"));
            std::fs::create_dir_all(dir)
                .and_then(|_| std::fs::write(&path, guard.session.trace().to_jsonl()))
                .map_err(|e| {
                    ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "trace_write_failed", format!("{}: {e}", path.display()))
                })?;
            Some(path.display().to_string())
        }
    };
    Ok(json_response(StatusCode::OK, &guard.session.finish_response(trace_file)))
}

async fn session_log(State(app): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let entry = app.lookup(&id)?;
    let guard = entry.read().await;
    Ok(jsonl_response(LoggedRequest::to_jsonl(&guard.log)))
}

/// Logs of every session in creation order; replaying it on a fresh
/// service recreates the same sessions under the same ids.
async fn full_log(State(app): State<AppState>) -> Response {
    let mut text = String::new();
    for entry in app.all() {
        text.push_str(&LoggedRequest::to_jsonl(&entry.read().await.log));
    }
    jsonl_response(text)
}
