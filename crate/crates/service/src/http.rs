//! HTTP API used by the review web UI.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use postforge_core::snippets::DraftOutcome;
use serde::{Deserialize, Serialize};

use crate::app::{Service, SettingsUpdate};
use crate::outbox::OutboxRecord;
use crate::session::AssignmentSession;
use crate::ServiceError;

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/assignment", get(get_assignment))
        .route("/posts/{id}", get(get_post))
        .route("/assignment/{id}/draft", post(regenerate_draft))
        .route("/assignment/{id}/answer", put(put_answer))
        .route("/assignment/{id}/approve", post(approve))
        .route("/assignment/{id}/decline", post(decline))
        .route("/settings", get(get_settings).put(put_settings))
        .with_state(service)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::UnknownSession(_) | ServiceError::UnknownPost(_) => StatusCode::NOT_FOUND,
            ServiceError::Transition(_) | ServiceError::AlreadySubmitted(_) => StatusCode::CONFLICT,
            ServiceError::EmptyAnswer | ServiceError::InvalidSettings(_) | ServiceError::InvalidBody(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            ServiceError::Match(postforge_core::matcher::MatchError::InvalidWeights(_)) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            ServiceError::Submission(_) => StatusCode::BAD_GATEWAY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status.is_server_error() {
            tracing::error!("{self}");
        }
        (status, Json(ErrorBody { error: self.to_string() })).into_response()
    }
}

fn body<T>(r: Result<Json<T>, JsonRejection>) -> Result<T, ServiceError> {
    r.map(|Json(v)| v).map_err(|e| ServiceError::InvalidBody(e.body_text()))
}

async fn get_assignment(State(s): State<Arc<Service>>) -> Result<Response, ServiceError> {
    Ok(match s.current_assignment().await? {
        Some(session) => Json(session).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    })
}

async fn get_post(State(s): State<Arc<Service>>, Path(id): Path<u64>) -> Result<Response, ServiceError> {
    let q = s.question(id).ok_or(ServiceError::UnknownPost(id))?;
    Ok(Json(q).into_response())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DraftResponse {
    pub session: AssignmentSession,
    pub draft: DraftOutcome,
}

async fn regenerate_draft(
    State(s): State<Arc<Service>>,
    Path(id): Path<String>,
) -> Result<Json<DraftResponse>, ServiceError> {
    let (session, draft) = s.regenerate_draft(&id).await?;
    Ok(Json(DraftResponse { session, draft }))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnswerBody {
    pub body: String,
}

async fn put_answer(
    State(s): State<Arc<Service>>,
    Path(id): Path<String>,
    req: Result<Json<AnswerBody>, JsonRejection>,
) -> Result<Json<AssignmentSession>, ServiceError> {
    let b = body(req)?;
    Ok(Json(s.put_answer(&id, b.body).await?))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ApproveResponse {
    pub session: AssignmentSession,
    pub record: OutboxRecord,
}

async fn approve(State(s): State<Arc<Service>>, Path(id): Path<String>) -> Result<Json<ApproveResponse>, ServiceError> {
    let (session, record) = s.approve(&id).await?;
    Ok(Json(ApproveResponse { session, record }))
}

async fn decline(State(s): State<Arc<Service>>, Path(id): Path<String>) -> Result<Json<AssignmentSession>, ServiceError> {
    Ok(Json(s.decline(&id).await?))
}

async fn get_settings(State(s): State<Arc<Service>>) -> Response {
    Json(s.settings().await).into_response()
}

async fn put_settings(
    State(s): State<Arc<Service>>,
    req: Result<Json<SettingsUpdate>, JsonRejection>,
) -> Result<Response, ServiceError> {
    let u = body(req)?;
    Ok(Json(s.update_settings(u).await?).into_response())
}

/// Binds and serves until the task is dropped.
pub async fn serve(service: Arc<Service>, addr: std::net::SocketAddr) -> Result<(), ServiceError> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| ServiceError::io(std::path::Path::new(&addr.to_string()), e))?;
    tracing::info!("listening on {}", listener.local_addr().map(|a| a.to_string()).unwrap_or_default());
    axum::serve(listener, router(service))
        .await
        .map_err(|e| ServiceError::io(std::path::Path::new(&addr.to_string()), e))
}
