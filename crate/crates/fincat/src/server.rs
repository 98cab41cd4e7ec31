//! The HTTP API: `POST /analyze` and `GET /health`.

use std::future::Future;
use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use fincat_core::{AnalysisResult, Analyzer, ClaimLabel, Error};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tower_http::cors::CorsLayer;

use crate::provider::DynProvider;

pub type SharedAnalyzer = Arc<Analyzer<DynProvider>>;

#[derive(Debug, Deserialize)]
struct AnalyzeRequest {
    text: String,
    #[serde(default)]
    target_span: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowBody {
    pub numeral: String,
    pub start: usize,
    pub end: usize,
    pub label: ClaimLabel,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeResponse {
    pub rows: Vec<RowBody>,
    pub elapsed_ms: u64,
    pub model: String,
}

impl AnalyzeResponse {
    pub fn new(result: &AnalysisResult, elapsed_ms: u64) -> Self {
        AnalyzeResponse {
            rows: result
                .rows
                .iter()
                .map(|r| RowBody {
                    numeral: r.numeral.clone(),
                    start: r.char_start,
                    end: r.char_end,
                    label: r.label,
                    probability: r.probability,
                })
                .collect(),
            elapsed_ms,
            model: result.model_fingerprint.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(ErrorBody { error: message.into() })).into_response()
}

/// Status for a failed analysis, judged by the innermost cause.
fn status_for(e: &Error) -> StatusCode {
    match e {
        Error::Mention { source, .. } | Error::Record { source, .. } => status_for(source),
        Error::Transport(_) | Error::Provider { .. } | Error::Protocol(_) => StatusCode::BAD_GATEWAY,
        Error::CacheMiss { .. } => StatusCode::UNPROCESSABLE_ENTITY,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

async fn health(State(analyzer): State<SharedAnalyzer>) -> Response {
    Json(serde_json::json!({ "status": "ok", "model": analyzer.fingerprint() })).into_response()
}

async fn analyze(State(analyzer): State<SharedAnalyzer>, body: Bytes) -> Response {
    let started = Instant::now();
    if body.iter().all(u8::is_ascii_whitespace) {
        return error(StatusCode::BAD_REQUEST, "request body is empty");
    }
    let request: AnalyzeRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("invalid request: {e}")),
    };
    if request.target_span.is_some_and(|v| !v.is_null()) {
        return error(StatusCode::NOT_IMPLEMENTED, "target_span is not supported yet");
    }

    let worker = analyzer.clone();
    let outcome = tokio::task::spawn_blocking(move || worker.analyze(&request.text)).await;
    match outcome {
        Ok(Ok(result)) => {
            let elapsed_ms = started.elapsed().as_millis() as u64;
            Json(AnalyzeResponse::new(&result, elapsed_ms)).into_response()
        }
        Ok(Err(e)) => error(status_for(&e), e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, format!("analysis aborted: {e}")),
    }
}

async fn not_found() -> Response {
    error(StatusCode::NOT_FOUND, "no such endpoint")
}

async fn wrong_method() -> Response {
    error(StatusCode::METHOD_NOT_ALLOWED, "method not allowed")
}

pub fn router(analyzer: SharedAnalyzer) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/analyze", post(analyze))
        .fallback(not_found)
        .method_not_allowed_fallback(wrong_method)
        .layer(CorsLayer::permissive())
        .with_state(analyzer)
}

/// Serve on an already bound listener until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    analyzer: SharedAnalyzer,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(analyzer))
        .with_graceful_shutdown(shutdown)
        .await
}
