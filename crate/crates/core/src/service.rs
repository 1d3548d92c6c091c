//! HTTP detection service for the browser extension.
//!
//! `POST /detect` takes `{"text": "..."}` and answers with every candidate
//! found in the cleaned text, its score, and an overall `breach` flag.
//! `GET /health` reports liveness and the model's feature schema. Request
//! bodies are never logged.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::cors::CorsLayer;

use crate::pipeline::Pipeline;
use crate::text::char_len;

pub const DEFAULT_MAX_BODY: usize = 256 * 1024;

#[derive(Debug, Clone, Deserialize)]
pub struct DetectRequest {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectedCandidate {
    pub start: usize,
    pub end: usize,
    pub matched: String,
    pub pattern: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectResponse {
    pub breach: bool,
    pub candidates: Vec<DetectedCandidate>,
    pub cleaned_text_length: usize,
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub max_body: usize,
    /// Origin allowed to call the service cross-site, e.g.
    /// `chrome-extension://<id>`. No CORS headers are sent when unset.
    pub allow_origin: Option<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            max_body: DEFAULT_MAX_BODY,
            allow_origin: None,
        }
    }
}

/// Errors surfaced as HTTP statuses.
#[derive(Debug, Clone, PartialEq)]
pub enum ServiceError {
    BadRequest(String),
    Internal(String),
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let msg = match &self {
            ServiceError::BadRequest(m) | ServiceError::Internal(m) => m.clone(),
        };
        (self.status(), Json(json!({ "error": msg }))).into_response()
    }
}

pub fn parse_request(body: &[u8]) -> Result<DetectRequest, ServiceError> {
    let value: serde_json::Value = serde_json::from_slice(body)
        .map_err(|e| ServiceError::BadRequest(format!("invalid JSON: {e}")))?;
    match value.get("text") {
        Some(serde_json::Value::String(s)) => Ok(DetectRequest { text: s.clone() }),
        Some(_) => Err(ServiceError::BadRequest("`text` must be a string".into())),
        None => Err(ServiceError::BadRequest("missing field `text`".into())),
    }
}

/// Run the pipeline on one request.
pub fn handle_detect(
    request: &DetectRequest,
    pipeline: &Pipeline,
) -> Result<DetectResponse, ServiceError> {
    let (cleaned, verdicts) = pipeline
        .detect("draft", &request.text)
        .map_err(|e| ServiceError::Internal(e.to_string()))?;
    let breach = verdicts.iter().any(|v| v.is_breach);
    let candidates = verdicts
        .into_iter()
        .map(|v| DetectedCandidate {
            start: v.candidate.span.start,
            end: v.candidate.span.end,
            matched: v.candidate.text,
            pattern: v.candidate.pattern_name,
            score: v.score,
        })
        .collect();
    Ok(DetectResponse {
        breach,
        candidates,
        cleaned_text_length: char_len(&cleaned),
    })
}

async fn detect(
    State(pipeline): State<Arc<Pipeline>>,
    body: Bytes,
) -> Result<Json<DetectResponse>, ServiceError> {
    let request = parse_request(&body)?;
    let response = tokio::task::spawn_blocking(move || handle_detect(&request, &pipeline))
        .await
        .map_err(|e| ServiceError::Internal(e.to_string()))??;
    tracing::debug!(
        candidates = response.candidates.len(),
        breach = response.breach,
        "detect"
    );
    Ok(Json(response))
}

async fn health(State(pipeline): State<Arc<Pipeline>>) -> Json<serde_json::Value> {
    Json(json!({
        "status": "ok",
        "model_schema_version": pipeline.classifier.schema_version(),
    }))
}

pub fn router(pipeline: Arc<Pipeline>, config: &ServiceConfig) -> Router {
    let mut app = Router::new()
        .route("/detect", post(detect))
        .route("/health", get(health))
        .layer(DefaultBodyLimit::max(config.max_body))
        .with_state(pipeline);
    if let Some(origin) = config
        .allow_origin
        .as_deref()
        .and_then(|o| HeaderValue::from_str(o).ok())
    {
        app = app.layer(
            CorsLayer::new()
                .allow_origin(origin)
                .allow_methods([Method::GET, Method::POST])
                .allow_headers([header::CONTENT_TYPE]),
        );
    }
    app
}

/// Bind and serve until the process is interrupted.
pub async fn serve(
    addr: SocketAddr,
    pipeline: Arc<Pipeline>,
    config: ServiceConfig,
) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(pipeline, &config))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_parsing() {
        assert_eq!(parse_request(br#"{"text":"hi"}"#).unwrap().text, "hi");
        assert!(matches!(
            parse_request(br#"{"body":"hi"}"#),
            Err(ServiceError::BadRequest(_))
        ));
        assert!(matches!(
            parse_request(br#"{"text":3}"#),
            Err(ServiceError::BadRequest(_))
        ));
        assert!(matches!(
            parse_request(b"not json"),
            Err(ServiceError::BadRequest(_))
        ));
    }

    #[test]
    fn empty_text_is_clean() {
        let r = handle_detect(
            &DetectRequest {
                text: String::new(),
            },
            &Pipeline::builtin(),
        )
        .unwrap();
        assert!(!r.breach);
        assert!(r.candidates.is_empty());
        assert_eq!(r.cleaned_text_length, 0);
    }
}
