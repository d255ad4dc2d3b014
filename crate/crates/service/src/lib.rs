//! HTTP facade over a register file.
//!
//! Reads are served from an immutable snapshot that is swapped after every
//! committed mutation. Mutations go through a single [`RegisterStore`] guarded
//! by a fair async mutex, so concurrent writers are applied in arrival order.

use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use riskwarden_core::assessment::{self, AssessmentReport, WhatIfScenario};
use riskwarden_core::cycle::{self, CycleConfig, CycleReport};
use riskwarden_core::dynamics::TransitionEvent;
use riskwarden_core::store::{self, ImportSummary, LogEntry, RegisterStore};
use riskwarden_core::{Error, ErrorClass, MetadataPatch, NewRisk, Observation, Register, RiskRecord};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tokio::sync::Mutex;
use tower_http::cors::{Any, CorsLayer};

#[derive(Debug, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: String,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code: code.into(),
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "parse_error", message)
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match (&e, e.class()) {
            (Error::Parse { .. } | Error::MalformedTable(_), _) => StatusCode::BAD_REQUEST,
            (_, ErrorClass::Domain) => StatusCode::UNPROCESSABLE_ENTITY,
            (_, ErrorClass::NotFound) => StatusCode::NOT_FOUND,
            (_, ErrorClass::Conflict) => StatusCode::CONFLICT,
            (_, ErrorClass::Io) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    path: PathBuf,
    writer: Arc<Mutex<RegisterStore>>,
    snapshot: RwLock<Arc<Register>>,
}

impl AppState {
    /// Loads the register and takes the writer lock on it.
    pub fn open(path: impl Into<PathBuf>) -> riskwarden_core::Result<Self> {
        let store = RegisterStore::open(path)?;
        let snapshot = Arc::new(store.register().clone());
        Ok(AppState {
            inner: Arc::new(Inner {
                path: store.path().to_path_buf(),
                writer: Arc::new(Mutex::new(store)),
                snapshot: RwLock::new(snapshot),
            }),
        })
    }

    pub fn snapshot(&self) -> Arc<Register> {
        self.inner.snapshot.read().expect("snapshot lock").clone()
    }

    async fn mutate<T, F>(&self, op: F) -> ApiResult<T>
    where
        T: Send + 'static,
        F: FnOnce(&mut RegisterStore) -> riskwarden_core::Result<T> + Send + 'static,
    {
        let mut guard = self.inner.writer.clone().lock_owned().await;
        let (out, next) = tokio::task::spawn_blocking(move || {
            let out = op(&mut guard);
            (out, Arc::new(guard.register().clone()))
        })
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?;
        *self.inner.snapshot.write().expect("snapshot lock") = next;
        Ok(out?)
    }
}

fn parse_json<T: DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("request body: {e}")))
}

pub fn router(state: AppState, cors_origin: Option<&str>) -> Router {
    let app = Router::new()
        .route("/healthz", get(healthz))
        .route("/risks", get(list_risks).post(add_risk))
        .route("/risks/{id}", get(get_risk).patch(update_risk))
        .route("/risks/{id}/retire", post(retire_risk))
        .route("/risks/{id}/observations", post(observe))
        .route("/observations/import", post(import))
        .route("/assessment", get(assessment))
        .route("/whatif", post(whatif))
        .route("/cycle", post(run_cycle))
        .route("/events", get(events))
        .fallback(not_found)
        .with_state(state);
    match cors_origin {
        Some(origin) => app.layer(cors(origin)),
        None => app,
    }
}

fn cors(origin: &str) -> CorsLayer {
    let layer = CorsLayer::new()
        .allow_methods([Method::GET, Method::POST, Method::PATCH])
        .allow_headers(Any);
    if origin == "*" {
        layer.allow_origin(Any)
    } else {
        match HeaderValue::from_str(origin) {
            Ok(v) => layer.allow_origin(v),
            Err(_) => layer,
        }
    }
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}

async fn healthz() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

#[derive(Debug, Deserialize)]
struct Page {
    offset: Option<usize>,
    limit: Option<usize>,
}

async fn list_risks(State(s): State<AppState>, Query(page): Query<Page>) -> Json<Vec<RiskRecord>> {
    let reg = s.snapshot();
    let risks = reg
        .risks
        .iter()
        .skip(page.offset.unwrap_or(0))
        .take(page.limit.unwrap_or(usize::MAX))
        .cloned()
        .collect();
    Json(risks)
}

async fn get_risk(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<RiskRecord>> {
    Ok(Json(s.snapshot().get(&id)?.clone()))
}

async fn add_risk(State(s): State<AppState>, body: Bytes) -> ApiResult<(StatusCode, Json<RiskRecord>)> {
    let new: NewRisk = parse_json(&body)?;
    let id = new.id.clone();
    let record = s
        .mutate(move |st| {
            st.add_risk(new)?;
            Ok(st.register().get(&id)?.clone())
        })
        .await?;
    Ok((StatusCode::CREATED, Json(record)))
}

async fn update_risk(
    State(s): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<RiskRecord>> {
    let patch: MetadataPatch = parse_json(&body)?;
    let record = s
        .mutate(move |st| {
            st.update_risk_metadata(&id, patch)?;
            Ok(st.register().get(&id)?.clone())
        })
        .await?;
    Ok(Json(record))
}

async fn retire_risk(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<RiskRecord>> {
    let record = s
        .mutate(move |st| {
            st.retire_risk(&id)?;
            Ok(st.register().get(&id)?.clone())
        })
        .await?;
    Ok(Json(record))
}

async fn observe(
    State(s): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Vec<TransitionEvent>>> {
    let obs: Observation = parse_json(&body)?;
    let events = s.mutate(move |st| st.record_observation(&id, &obs)).await?;
    Ok(Json(events))
}

async fn import(State(s): State<AppState>, body: Bytes) -> ApiResult<Json<ImportSummary>> {
    let summary = s.mutate(move |st| st.import_observations(&body[..])).await?;
    Ok(Json(summary))
}

async fn assessment(State(s): State<AppState>) -> Json<AssessmentReport> {
    Json(assessment::assess(&s.snapshot()))
}

async fn whatif(State(s): State<AppState>, body: Bytes) -> ApiResult<Json<AssessmentReport>> {
    let scenario: WhatIfScenario = parse_json(&body)?;
    Ok(Json(assessment::what_if(&s.snapshot(), &scenario)?))
}

async fn run_cycle(State(s): State<AppState>, body: Bytes) -> ApiResult<Json<CycleReport>> {
    let reg = s.snapshot();
    let config = if body.iter().all(u8::is_ascii_whitespace) {
        CycleConfig::from_register(&reg)
    } else {
        parse_json(&body)?
    };
    Ok(Json(cycle::run_cycle(&reg, &config)?))
}

#[derive(Debug, Deserialize)]
struct Since {
    since: Option<f64>,
}

async fn events(State(s): State<AppState>, Query(q): Query<Since>) -> ApiResult<Json<Vec<LogEntry>>> {
    let path = s.inner.path.clone();
    let entries = tokio::task::spawn_blocking(move || store::read_events(&path, q.since))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    Ok(Json(entries))
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Register(#[from] Error),
    #[error("BindFailure: cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub register: PathBuf,
    pub addr: SocketAddr,
    pub cors_origin: Option<String>,
}

/// A bound, not yet running, server.
pub struct Server {
    listener: TcpListener,
    app: Router,
}

impl Server {
    /// Loads the register, then binds. Load errors win over bind errors.
    pub async fn bind(cfg: &ServeConfig) -> Result<Self, ServeError> {
        let state = AppState::open(&cfg.register)?;
        let listener = TcpListener::bind(cfg.addr)
            .await
            .map_err(|source| ServeError::Bind { addr: cfg.addr, source })?;
        Ok(Server {
            listener,
            app: router(state, cfg.cors_origin.as_deref()),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.listener.local_addr().expect("bound listener has an address")
    }

    /// Serves until `shutdown` resolves, then drains in-flight requests.
    pub async fn run_until(self, shutdown: impl Future<Output = ()> + Send + 'static) -> Result<(), ServeError> {
        axum::serve(self.listener, self.app)
            .with_graceful_shutdown(shutdown)
            .await?;
        Ok(())
    }

    pub async fn run(self) -> Result<(), ServeError> {
        self.run_until(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
    }
}

pub async fn serve(cfg: &ServeConfig) -> Result<(), ServeError> {
    Server::bind(cfg).await?.run().await
}
