//! HTTP API over the completion service.
//!
//! Models live in memory, one working copy per id. Suggestion endpoints
//! never change a model; only `accept` does.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use log::info;
use serde::{Deserialize, Serialize};
use serde_json::json;

use modelcomp_core::model::{load_model, merge_suggestions, save_model, ClassSuggestionSet, Identifier, Model, ModelError};
use modelcomp_core::service::{
    attribute_set, name_set, CompletionConfig, CompletionService, NameCandidate, ServiceError,
};

pub const SEED_HEADER: &str = "x-seed";

pub struct AppState {
    service: CompletionService,
    models: RwLock<BTreeMap<u64, Model>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(service: CompletionService) -> Arc<Self> {
        Arc::new(Self {
            service,
            models: RwLock::new(BTreeMap::new()),
            next_id: AtomicU64::new(1),
        })
    }

    fn model(&self, id: u64) -> Result<Model, ApiError> {
        self.models
            .read()
            .unwrap()
            .get(&id)
            .cloned()
            .ok_or(ApiError::NotFound(id))
    }
}

#[derive(Debug)]
pub enum ApiError {
    NotFound(u64),
    BadRequest(String),
    WrongKind(&'static str),
    Invalid(serde_json::Value),
    Service(ServiceError),
    Internal(String),
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError::Service(e)
    }
}

impl From<ModelError> for ApiError {
    fn from(e: ModelError) -> Self {
        ApiError::BadRequest(e.to_string())
    }
}

fn service_status(e: &ServiceError) -> (StatusCode, &'static str) {
    match e {
        ServiceError::Provider(_) => (StatusCode::BAD_GATEWAY, "provider_error"),
        ServiceError::InvalidConfig(_) | ServiceError::Prompt(_) => (StatusCode::BAD_REQUEST, "invalid_config"),
        ServiceError::NoAssociations => (StatusCode::UNPROCESSABLE_ENTITY, "no_associations"),
        ServiceError::UnknownClass(_) => (StatusCode::UNPROCESSABLE_ENTITY, "unknown_class"),
        ServiceError::AlreadyClosed => (StatusCode::UNPROCESSABLE_ENTITY, "already_closed"),
        ServiceError::SuggestionUnparseable { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "unparseable"),
        ServiceError::Model(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_model"),
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::NotFound(id) => (
                StatusCode::NOT_FOUND,
                json!({"error": "not_found", "message": format!("no model with id {id}")}),
            ),
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, json!({"error": "bad_request", "message": m})),
            ApiError::WrongKind(expected) => (
                StatusCode::UNPROCESSABLE_ENTITY,
                json!({"error": "wrong_kind", "message": format!("endpoint needs a {expected} model")}),
            ),
            ApiError::Invalid(violations) => (
                StatusCode::UNPROCESSABLE_ENTITY,
                json!({"error": "invalid_model", "violations": violations}),
            ),
            ApiError::Service(e) => {
                let (status, kind) = service_status(&e);
                let mut body = json!({"error": kind, "message": e.to_string()});
                if let ServiceError::SuggestionUnparseable { raw, .. } = &e {
                    body["raw"] = json!(raw);
                }
                (status, body)
            }
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, json!({"error": "internal", "message": m})),
        };
        (status, Json(body)).into_response()
    }
}

/// The model in its `.mcj` JSON form.
fn model_json(model: &Model) -> serde_json::Value {
    serde_json::from_slice(&save_model(model)).expect("saved models are JSON")
}

fn parse_json<T: serde::de::DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    let bytes: &[u8] = if body.iter().all(u8::is_ascii_whitespace) { b"{}" } else { body };
    serde_json::from_slice(bytes).map_err(|e| ApiError::BadRequest(e.to_string()))
}

fn seeded(mut cfg: CompletionConfig, headers: &HeaderMap) -> Result<CompletionConfig, ApiError> {
    if let Some(v) = headers.get(SEED_HEADER) {
        cfg.rng_seed = v
            .to_str()
            .ok()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| ApiError::BadRequest("X-Seed must be an unsigned integer".into()))?;
    }
    Ok(cfg)
}

async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, ServiceError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
        .map_err(ApiError::from)
}

#[derive(Deserialize)]
struct CreateQuery {
    id: Option<u64>,
}

async fn create_model(
    State(state): State<Arc<AppState>>,
    Query(q): Query<CreateQuery>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let model = load_model(&body)?;
    if let Model::Class(d) = &model {
        let violations = d.validate();
        if !violations.is_empty() {
            return Err(ApiError::Invalid(json!(violations)));
        }
    }
    let mut models = state.models.write().unwrap();
    let (id, status) = match q.id {
        Some(id) if models.contains_key(&id) => (id, StatusCode::OK),
        Some(id) => return Err(ApiError::NotFound(id)),
        None => (state.next_id.fetch_add(1, Ordering::SeqCst), StatusCode::CREATED),
    };
    models.insert(id, model);
    info!("stored model {id}");
    Ok((status, Json(json!({"id": id}))).into_response())
}

async fn get_model(State(state): State<Arc<AppState>>, Path(id): Path<u64>) -> Result<Json<serde_json::Value>, ApiError> {
    Ok(Json(model_json(&state.model(id)?)))
}

async fn suggest_classes(
    State(state): State<Arc<AppState>>,
    Path(id): Path<u64>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Json<ClassSuggestionSet>, ApiError> {
    let cfg = seeded(parse_json(&body)?, &headers)?;
    let Model::Class(diagram) = state.model(id)? else {
        return Err(ApiError::WrongKind("class_diagram"));
    };
    let service = state.service.clone();
    Ok(Json(blocking(move || service.suggest_classes(&diagram, &cfg)).await?))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AttributeBody {
    class: Identifier,
    #[serde(default)]
    config: CompletionConfig,
}

async fn suggest_attributes(
    State(state): State<Arc<AppState>>,
    Path(id): Path<u64>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Json<ClassSuggestionSet>, ApiError> {
    let req: AttributeBody = parse_json(&body)?;
    let cfg = seeded(req.config, &headers)?;
    let Model::Class(diagram) = state.model(id)? else {
        return Err(ApiError::WrongKind("class_diagram"));
    };
    let service = state.service.clone();
    let class = req.class;
    let target = class.clone();
    let found = blocking(move || service.suggest_attributes(&diagram, &target, &cfg)).await?;
    Ok(Json(attribute_set(&class, found)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NameBody {
    source: Identifier,
    target: Identifier,
    #[serde(default = "three")]
    attempts: usize,
    #[serde(default)]
    config: CompletionConfig,
}

fn three() -> usize {
    3
}

#[derive(Serialize)]
struct NameResponse {
    candidates: Vec<NameCandidate>,
    /// Candidates as named associations, ready for `accept`.
    suggestions: ClassSuggestionSet,
}

async fn suggest_assoc_name(
    State(state): State<Arc<AppState>>,
    Path(id): Path<u64>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Json<NameResponse>, ApiError> {
    let req: NameBody = parse_json(&body)?;
    let cfg = seeded(req.config, &headers)?;
    let Model::Class(diagram) = state.model(id)? else {
        return Err(ApiError::WrongKind("class_diagram"));
    };
    for end in [&req.source, &req.target] {
        if !diagram.has_class(end) {
            return Err(ServiceError::UnknownClass(end.display().to_string()).into());
        }
    }
    let service = state.service.clone();
    let (source, target) = (req.source.clone(), req.target.clone());
    let attempts = req.attempts;
    let candidates =
        blocking(move || service.suggest_association_name((&source, &target), &cfg, attempts)).await?;

    let suggestions = name_set((&req.source, &req.target), &candidates);
    Ok(Json(NameResponse { candidates, suggestions }))
}

async fn complete_activity(
    State(state): State<Arc<AppState>>,
    Path(id): Path<u64>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Json<serde_json::Value>, ApiError> {
    let cfg = seeded(parse_json(&body)?, &headers)?;
    let Model::Activity(partial) = state.model(id)? else {
        return Err(ApiError::WrongKind("activity"));
    };
    let service = state.service.clone();
    let completed = blocking(move || service.complete_activity(&partial, &cfg)).await?;
    Ok(Json(model_json(&Model::Activity(completed))))
}

async fn accept(
    State(state): State<Arc<AppState>>,
    Path(id): Path<u64>,
    body: Bytes,
) -> Result<Json<serde_json::Value>, ApiError> {
    let mut models = state.models.write().unwrap();
    let current = models.get(&id).ok_or(ApiError::NotFound(id))?;
    let updated = match current {
        Model::Class(diagram) => {
            let accepted: ClassSuggestionSet = parse_json(&body)?;
            let merged = merge_suggestions(diagram, &accepted);
            let violations = merged.validate();
            if !violations.is_empty() {
                return Err(ApiError::Invalid(json!(violations)));
            }
            Model::Class(merged)
        }
        Model::Activity(_) => match load_model(&body)? {
            Model::Activity(a) => Model::Activity(a),
            Model::Class(_) => return Err(ApiError::WrongKind("activity")),
        },
    };
    let out = model_json(&updated);
    models.insert(id, updated);
    Ok(Json(out))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/models", post(create_model))
        .route("/models/{id}", get(get_model))
        .route("/models/{id}/suggest/classes", post(suggest_classes))
        .route("/models/{id}/suggest/attributes", post(suggest_attributes))
        .route("/models/{id}/suggest/assoc-name", post(suggest_assoc_name))
        .route("/models/{id}/complete/activity", post(complete_activity))
        .route("/models/{id}/accept", post(accept))
        .with_state(state)
}

/// Serves until ctrl-c.
pub async fn serve(addr: SocketAddr, service: CompletionService) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(service)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
