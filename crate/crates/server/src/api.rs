//! HTTP routes over a [`Store`].
//!
//! Errors are JSON `{"reason": ...}` with 404 for unknown ids, 409 for
//! illegal actions or disabled operators, and 422 for malformed bodies.

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use drillboards_core::aggregation::AggregationError;
use drillboards_core::document::{save_document, DocumentError, Mutation};
use drillboards_core::hierarchy::HierarchyError;
use drillboards_core::layout::{LayoutError, Viewport};
use drillboards_core::model::NodeId;
use drillboards_core::session::{Action, SessionError};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::services::ServeDir;

use crate::store::{Store, StoreError};

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    reason: String,
}

impl ApiError {
    fn unprocessable(reason: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            reason: reason.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "reason": self.reason }))).into_response()
    }
}

fn hierarchy_status(e: &HierarchyError) -> StatusCode {
    match e {
        HierarchyError::UnknownNode(_) | HierarchyError::UnknownView(_) => StatusCode::NOT_FOUND,
        _ => StatusCode::CONFLICT,
    }
}

fn document_status(e: &DocumentError) -> StatusCode {
    match e {
        DocumentError::Hierarchy(h) => hierarchy_status(h),
        DocumentError::Aggregation(AggregationError::Hierarchy(h)) => hierarchy_status(h),
        DocumentError::Aggregation(AggregationError::UnknownPile(_))
        | DocumentError::UnknownTable(_) => StatusCode::NOT_FOUND,
        DocumentError::Aggregation(_)
        | DocumentError::ReadOnly
        | DocumentError::ReferencedByView { .. } => StatusCode::CONFLICT,
        DocumentError::Ingest(_)
        | DocumentError::Malformed(_)
        | DocumentError::SchemaVersionMismatch { .. }
        | DocumentError::IntegrityViolation(_) => StatusCode::UNPROCESSABLE_ENTITY,
        DocumentError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let status = match &e {
            StoreError::UnknownDocument(_) | StoreError::UnknownSession(_) => StatusCode::NOT_FOUND,
            StoreError::DuplicateDocument(_) => StatusCode::CONFLICT,
            StoreError::Session(SessionError::Hierarchy(h)) => hierarchy_status(h),
            StoreError::Session(SessionError::Layout(LayoutError::InvalidViewport)) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            StoreError::Session(SessionError::Layout(_)) => StatusCode::CONFLICT,
            StoreError::Document(d) => document_status(d),
            StoreError::Persist { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError {
            status,
            reason: e.to_string(),
        }
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Parses a JSON body; an empty body reads as `T::default()`.
fn body<T: DeserializeOwned + Default>(bytes: &Bytes) -> Result<T, ApiError> {
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(bytes).map_err(|e| ApiError::unprocessable(e.to_string()))
}

fn required_body<T: DeserializeOwned>(bytes: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(bytes).map_err(|e| ApiError::unprocessable(e.to_string()))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OpenSessionRequest {
    view: Option<String>,
    viewport: Option<Viewport>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct OpenSessionResponse {
    session_id: String,
    state: drillboards_core::session::SessionPayload,
}

#[derive(Debug, Deserialize)]
struct ApplicableRequest {
    nodes: Vec<NodeId>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase")]
struct DocumentQuery {
    include_data: Option<String>,
}

async fn list(State(store): State<Arc<Store>>) -> Json<Value> {
    Json(json!(store.list()))
}

async fn document(
    State(store): State<Arc<Store>>,
    Path(id): Path<String>,
    Query(q): Query<DocumentQuery>,
) -> ApiResult<Value> {
    let doc = store.document(&id)?;
    let mut value: Value =
        serde_json::from_slice(&save_document(&doc)).expect("saved documents are JSON");
    let include = matches!(q.include_data.as_deref(), Some("1" | "true"));
    if !include {
        for table in value["tables"].as_array_mut().into_iter().flatten() {
            for feature in table["features"].as_array_mut().into_iter().flatten() {
                if let Some(obj) = feature.as_object_mut() {
                    obj.remove("values");
                }
            }
        }
    }
    Ok(Json(value))
}

async fn open(
    State(store): State<Arc<Store>>,
    Path(id): Path<String>,
    bytes: Bytes,
) -> Result<(StatusCode, Json<OpenSessionResponse>), ApiError> {
    let req: OpenSessionRequest = body(&bytes)?;
    let state = store.open_session(&id, req.view.as_deref(), req.viewport)?;
    Ok((
        StatusCode::CREATED,
        Json(OpenSessionResponse {
            session_id: state.session_id.clone(),
            state,
        }),
    ))
}

async fn session(
    State(store): State<Arc<Store>>,
    Path(sid): Path<String>,
) -> ApiResult<drillboards_core::session::SessionPayload> {
    Ok(Json(store.session(&sid)?))
}

async fn action(
    State(store): State<Arc<Store>>,
    Path(sid): Path<String>,
    bytes: Bytes,
) -> ApiResult<drillboards_core::session::SessionPayload> {
    let action: Action = required_body(&bytes)?;
    Ok(Json(store.act(&sid, &action)?))
}

async fn mutate(
    State(store): State<Arc<Store>>,
    Path(id): Path<String>,
    bytes: Bytes,
) -> ApiResult<drillboards_core::document::MutationOutcome> {
    let mutation: Mutation = required_body(&bytes)?;
    Ok(Json(store.mutate(&id, &mutation)?))
}

async fn applicable(
    State(store): State<Arc<Store>>,
    Path(id): Path<String>,
    bytes: Bytes,
) -> ApiResult<drillboards_core::aggregation::OpAvailability> {
    let req: ApplicableRequest = required_body(&bytes)?;
    Ok(Json(store.applicable(&id, &req.nodes)?))
}

async fn not_found() -> ApiError {
    ApiError {
        status: StatusCode::NOT_FOUND,
        reason: "no such route".into(),
    }
}

/// Builds the API router. With `webui`, static files from that directory
/// are served for every non-API path.
pub fn router(store: Arc<Store>, webui: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/drillboards", get(list))
        .route("/api/drillboards/{id}", get(document))
        .route("/api/drillboards/{id}/sessions", post(open))
        .route("/api/drillboards/{id}/mutations", post(mutate))
        .route("/api/drillboards/{id}/applicable", post(applicable))
        .route("/api/sessions/{sid}", get(session))
        .route("/api/sessions/{sid}/actions", post(action))
        .route("/api/{*rest}", axum::routing::any(not_found))
        .with_state(store);
    match webui {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(not_found),
    }
}
