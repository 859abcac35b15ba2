//! `/v1` routes. Handlers hand the request to the engine on the blocking
//! pool; the engine serializes mutations per project.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;

use crate::engine::{ApiError, Engine, ExportFormat, Reply};

pub const IDEMPOTENCY_HEADER: &str = "idempotency-key";

type Shared = Arc<Engine>;

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self.body())).into_response()
    }
}

impl IntoResponse for Reply {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self.body)).into_response()
    }
}

async fn blocking<T: Send + 'static>(
    engine: Shared,
    f: impl FnOnce(&Engine) -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(move || f(&engine))
        .await
        .map_err(|e| ApiError::Internal(format!("worker failed: {e}")))?
}

fn idempotency_key(headers: &HeaderMap) -> Result<Option<String>, ApiError> {
    headers
        .get(IDEMPOTENCY_HEADER)
        .map(|v| {
            v.to_str()
                .ok()
                .filter(|s| !s.trim().is_empty())
                .map(str::to_string)
                .ok_or_else(|| ApiError::BadRequest("idempotency key must be non-empty visible ASCII".into()))
        })
        .transpose()
}

async fn create_project(State(engine): State<Shared>, headers: HeaderMap, body: Bytes) -> Result<Reply, ApiError> {
    let key = idempotency_key(&headers)?;
    blocking(engine, move |e| e.create_project(key.as_deref(), &body)).await
}

async fn get_project(State(engine): State<Shared>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let project = blocking(engine, move |e| e.project(&id)).await?;
    Ok(Json(project).into_response())
}

async fn annotations(
    State(engine): State<Shared>,
    Path((id, nid)): Path<(String, String)>,
) -> Result<Response, ApiError> {
    let a = blocking(engine, move |e| e.annotations(&id, &nid)).await?;
    Ok(Json(a).into_response())
}

async fn bind(
    State(engine): State<Shared>,
    Path((id, nid)): Path<(String, String)>,
    headers: HeaderMap,
) -> Result<Reply, ApiError> {
    let key = idempotency_key(&headers)?;
    blocking(engine, move |e| e.bind(key.as_deref(), &id, &nid)).await
}

async fn regenerate(
    State(engine): State<Shared>,
    Path((id, nid)): Path<(String, String)>,
    headers: HeaderMap,
) -> Result<Reply, ApiError> {
    let key = idempotency_key(&headers)?;
    blocking(engine, move |e| e.regenerate(key.as_deref(), &id, &nid)).await
}

async fn edits(
    State(engine): State<Shared>,
    Path((id, nid)): Path<(String, String)>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Reply, ApiError> {
    let key = idempotency_key(&headers)?;
    blocking(engine, move |e| e.edit(key.as_deref(), &id, &nid, &body)).await
}

async fn feedback(
    State(engine): State<Shared>,
    Path((id, nid)): Path<(String, String)>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Reply, ApiError> {
    let key = idempotency_key(&headers)?;
    blocking(engine, move |e| e.feedback(key.as_deref(), &id, &nid, &body)).await
}

#[derive(Deserialize)]
struct ExportQuery {
    format: String,
}

async fn export(
    State(engine): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<ExportQuery>,
) -> Result<Response, ApiError> {
    let format = ExportFormat::parse(&q.format)?;
    let out = blocking(engine, move |e| e.export(&id, format)).await?;
    let disposition = HeaderValue::from_str(&format!("attachment; filename=\"{}\"", out.file_name))
        .map_err(|e| ApiError::Internal(e.to_string()))?;
    Ok((
        [(header::CONTENT_TYPE, HeaderValue::from_static(out.content_type)), (header::CONTENT_DISPOSITION, disposition)],
        out.bytes,
    )
        .into_response())
}

async fn chart_svg(State(engine): State<Shared>, Path(file): Path<String>) -> Result<Response, ApiError> {
    let id = file
        .strip_suffix(".svg")
        .ok_or_else(|| ApiError::NotFound(format!("unknown resource {file}")))?
        .to_string();
    let svg = blocking(engine, move |e| e.chart_svg(&id)).await?;
    Ok(([(header::CONTENT_TYPE, "image/svg+xml")], svg).into_response())
}

pub fn router(engine: Arc<Engine>) -> Router {
    Router::new()
        .route("/v1/projects", post(create_project))
        .route("/v1/projects/{id}", get(get_project))
        .route("/v1/projects/{id}/narratives/{nid}/annotations", get(annotations))
        .route("/v1/projects/{id}/narratives/{nid}/bind", post(bind))
        .route("/v1/projects/{id}/narratives/{nid}/edits", post(edits))
        .route("/v1/projects/{id}/narratives/{nid}/feedback", post(feedback))
        .route("/v1/projects/{id}/narratives/{nid}/regenerate", post(regenerate))
        .route("/v1/projects/{id}/export", get(export))
        .route("/v1/charts/{file}", get(chart_svg))
        .with_state(engine)
}

/// Serves until the process is stopped.
pub async fn serve(addr: SocketAddr, engine: Arc<Engine>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(engine)).await
}

/// Builds a runtime and serves on it; for callers without one.
pub fn serve_blocking(addr: SocketAddr, engine: Arc<Engine>) -> std::io::Result<()> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?
        .block_on(serve(addr, engine))
}
