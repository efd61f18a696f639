//! HTTP+JSON API over a data directory.
//!
//! Handlers only translate between HTTP and [`crate::workflow`]; any response
//! can be reproduced by calling the same workflow function on the same files.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use driftlab_core::detectors::DetectionEvent;
use driftlab_core::labels::{Cause, ExpertInfo, FieldError, LabelDraft, LabelFilter};
use driftlab_core::Timestamp;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Error;
use crate::io::detector_config::parse_detector_set;
use crate::label_store::LabelStore;
use crate::workflow::{self, EvaluationReport, LabelSource, PageRequest, PeriodQuery, RunRegistry};
use crate::workspace::{DataDir, TurbineInfo};

pub const IDEMPOTENCY_HEADER: &str = "idempotency-key";

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    pub data_dir: DataDir,
    pub read_only: bool,
}

struct Inner {
    data: DataDir,
    labels: LabelStore,
    runs: RunRegistry,
    read_only: bool,
}

#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    pub fn open(data: DataDir, read_only: bool) -> crate::error::Result<Self> {
        data.check(!read_only)?;
        let labels = LabelStore::open(data.labels_dir(), read_only)?;
        let runs = RunRegistry::open(data.clone())?;
        Ok(Self(Arc::new(Inner { data, labels, runs, read_only })))
    }

    pub fn labels(&self) -> &LabelStore {
        &self.0.labels
    }
}

/// Body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiErrorBody {
    pub code: String,
    pub message: String,
    pub correlation_id: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fields: Vec<ApiFieldError>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiFieldError {
    pub field: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    fields: Vec<FieldError>,
}

impl ApiError {
    fn validation(message: impl Into<String>) -> Self {
        Self { status: StatusCode::UNPROCESSABLE_ENTITY, code: "validation_error", message: message.into(), fields: Vec::new() }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        let (status, code) = match &e {
            Error::NotFound { .. } => (StatusCode::NOT_FOUND, "not_found"),
            Error::ReadOnly => (StatusCode::FORBIDDEN, "read_only"),
            Error::UnknownExpert(_) => (StatusCode::FORBIDDEN, "unknown_expert"),
            Error::InvalidLabel(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_label"),
            e if e.is_validation() => (StatusCode::UNPROCESSABLE_ENTITY, "validation_error"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal_error"),
        };
        let fields = match e {
            Error::InvalidLabel(f) => f,
            _ => Vec::new(),
        };
        Self { status, code, message, fields }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        let mut e = Self::validation(r.body_text());
        if r.status() == StatusCode::UNSUPPORTED_MEDIA_TYPE {
            e.status = r.status();
        }
        e
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        Self::validation(r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ApiErrorBody {
            code: self.code.into(),
            message: self.message,
            correlation_id: uuid::Uuid::new_v4().to_string(),
            fields: self.fields.into_iter().map(|f| ApiFieldError { field: f.field.into(), message: f.message }).collect(),
        };
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> crate::error::Result<T> + Send + 'static) -> ApiResult<T> {
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map_err(ApiError::from),
        Err(e) => Err(ApiError { status: StatusCode::INTERNAL_SERVER_ERROR, code: "internal_error", message: e.to_string(), fields: Vec::new() }),
    }
}

fn idempotency_key(headers: &HeaderMap) -> ApiResult<Option<String>> {
    match headers.get(IDEMPOTENCY_HEADER) {
        None => Ok(None),
        Some(v) => match v.to_str() {
            Ok(s) if !s.trim().is_empty() && s.len() <= 256 => Ok(Some(s.to_string())),
            _ => Err(ApiError::validation("Idempotency-Key must be 1-256 visible ASCII characters")),
        },
    }
}

fn require_writable(state: &AppState) -> ApiResult<()> {
    if state.0.read_only {
        Err(Error::ReadOnly.into())
    } else {
        Ok(())
    }
}

async fn turbines(State(state): State<AppState>) -> ApiResult<Json<Vec<TurbineInfo>>> {
    let s = state.clone();
    Ok(Json(blocking(move || Ok(s.0.data.turbines())).await?))
}

#[derive(Debug, Default, Deserialize)]
pub struct ResidualQuery {
    pub from: Option<Timestamp>,
    pub to: Option<Timestamp>,
    pub max_points: Option<usize>,
    /// Comma-separated layers: `labels`, `events`.
    pub overlay: Option<String>,
    pub run_id: Option<String>,
}

async fn residuals(
    State(state): State<AppState>,
    Path((turbine, model)): Path<(String, String)>,
    query: Result<Query<ResidualQuery>, QueryRejection>,
) -> ApiResult<Json<workflow::ResidualPage>> {
    let Query(q) = query?;
    let mut req = PageRequest { from: q.from, to: q.to, max_points: q.max_points, run_id: q.run_id, ..Default::default() };
    for layer in q.overlay.iter().flat_map(|o| o.split(',')).map(str::trim).filter(|l| !l.is_empty()) {
        match layer {
            "labels" => req.overlay_labels = true,
            "events" => req.overlay_events = true,
            other => return Err(ApiError::validation(format!("unknown overlay `{other}`; expected labels or events"))),
        }
    }
    let s = state.clone();
    Ok(Json(blocking(move || workflow::residual_page(&s.0.data, &s.0.labels, &turbine, &model, &req)).await?))
}

async fn post_label(
    State(state): State<AppState>,
    headers: HeaderMap,
    body: Result<Json<LabelDraft>, JsonRejection>,
) -> ApiResult<Response> {
    require_writable(&state)?;
    let key = idempotency_key(&headers)?;
    let Json(draft) = body?;
    let s = state.clone();
    let appended = blocking(move || s.0.labels.append(draft, key.as_deref(), workflow::now())).await?;
    let status = if appended.created { StatusCode::CREATED } else { StatusCode::OK };
    Ok((status, Json(appended.label)).into_response())
}

#[derive(Debug, Default, Deserialize)]
pub struct LabelQuery {
    pub turbine_id: Option<String>,
    pub model_id: Option<String>,
    pub expert_id: Option<String>,
    pub from: Option<Timestamp>,
    pub to: Option<Timestamp>,
    pub cause: Option<Cause>,
}

async fn get_labels(State(state): State<AppState>, query: Result<Query<LabelQuery>, QueryRejection>) -> ApiResult<Response> {
    let Query(q) = query?;
    let filter = LabelFilter { turbine_id: q.turbine_id, model_id: q.model_id, expert_id: q.expert_id, from: q.from, to: q.to, cause: q.cause };
    Ok(Json(state.0.labels.query(&filter)).into_response())
}

async fn get_experts(State(state): State<AppState>) -> Json<Vec<ExpertInfo>> {
    Json(state.0.labels.experts())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectRequest {
    pub turbine_id: String,
    pub model_id: String,
    /// Detector set keyed by kind; an empty object runs nothing.
    #[serde(default = "empty_object")]
    pub detectors: Value,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectResponse {
    pub run_id: String,
    pub status: workflow::RunStatus,
    pub events: std::collections::BTreeMap<String, Vec<DetectionEvent>>,
}

async fn post_detect(
    State(state): State<AppState>,
    headers: HeaderMap,
    body: Result<Json<DetectRequest>, JsonRejection>,
) -> ApiResult<Response> {
    require_writable(&state)?;
    let key = idempotency_key(&headers)?;
    let Json(req) = body?;
    let configs = parse_detector_set(req.detectors)?;
    let s = state.clone();
    let (run, created) = blocking(move || s.0.runs.detect(&req.turbine_id, &req.model_id, &configs, key.as_deref())).await?;
    let status = if created { StatusCode::CREATED } else { StatusCode::OK };
    Ok((status, Json(DetectResponse { run_id: run.run_id, status: run.status, events: run.events })).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateRequest {
    pub run_id: String,
    #[serde(default)]
    pub source: LabelSource,
    #[serde(default)]
    pub tolerance_s: i64,
    pub overlap_threshold: Option<f64>,
    pub expert_id: Option<String>,
}

async fn post_evaluate(State(state): State<AppState>, body: Result<Json<EvaluateRequest>, JsonRejection>) -> ApiResult<Json<EvaluationReport>> {
    let Json(req) = body?;
    let mut query = PeriodQuery { source: req.source, expert_id: req.expert_id, ..Default::default() };
    if let Some(t) = req.overlap_threshold {
        query.overlap_threshold = t;
    }
    let s = state.clone();
    Ok(Json(blocking(move || workflow::evaluate_run(&s.0.data, &s.0.labels, &req.run_id, &query, req.tolerance_s)).await?))
}

async fn fallback() -> ApiError {
    ApiError { status: StatusCode::NOT_FOUND, code: "not_found", message: "no such endpoint".into(), fields: Vec::new() }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/turbines", get(turbines))
        .route("/turbines/{id}/models/{mid}/residuals", get(residuals))
        .route("/labels", get(get_labels).post(post_label))
        .route("/experts", get(get_experts))
        .route("/detect", axum::routing::post(post_detect))
        .route("/evaluate", axum::routing::post(post_evaluate))
        .fallback(fallback)
        .method_not_allowed_fallback(|| async {
            ApiError { status: StatusCode::METHOD_NOT_ALLOWED, code: "method_not_allowed", message: "method not allowed".into(), fields: Vec::new() }
        })
        .with_state(state)
}

/// Binds and serves until the process receives Ctrl-C.
pub async fn serve(config: ServiceConfig) -> crate::error::Result<()> {
    let state = AppState::open(config.data_dir.clone(), config.read_only)?;
    let listener = tokio::net::TcpListener::bind(config.listen).await.map_err(|e| Error::io(config.listen.to_string(), e))?;
    eprintln!("listening on {}", listener.local_addr().map_err(|e| Error::io(config.listen.to_string(), e))?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| Error::io(config.listen.to_string(), e))
}
