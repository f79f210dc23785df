//! HTTP scoring service used by the browser capture page.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::extract::{DefaultBodyLimit, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

use crate::scoring::{ErrorBody, Scorer};

pub const MAX_BODY_BYTES: usize = 5 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub model_version: String,
}

/// `origins` empty allows any origin.
pub fn cors_layer(origins: &[String]) -> Result<CorsLayer, String> {
    let allow = if origins.is_empty() {
        AllowOrigin::from(Any)
    } else {
        let parsed = origins
            .iter()
            .map(|o| HeaderValue::from_str(o).map_err(|_| format!("invalid CORS origin `{o}`")))
            .collect::<Result<Vec<_>, _>>()?;
        AllowOrigin::list(parsed)
    };
    Ok(CorsLayer::new()
        .allow_origin(allow)
        .allow_methods([Method::GET, Method::POST, Method::OPTIONS])
        .allow_headers([header::CONTENT_TYPE]))
}

pub fn router(scorer: Arc<Scorer>, cors: CorsLayer) -> Router {
    Router::new()
        .route("/api/v1/health", get(health))
        .route("/api/v1/score", post(score))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .layer(cors)
        .with_state(scorer)
}

async fn health(State(scorer): State<Arc<Scorer>>) -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        model_version: scorer.model_version().to_string(),
    })
}

fn error(status: StatusCode, body: ErrorBody) -> Response {
    (status, Json(body)).into_response()
}

async fn score(State(scorer): State<Arc<Scorer>>, body: Result<Bytes, BytesRejection>) -> Response {
    let bytes = match body {
        Ok(b) => b,
        Err(rejection) if rejection.status() == StatusCode::PAYLOAD_TOO_LARGE => {
            return error(
                StatusCode::PAYLOAD_TOO_LARGE,
                ErrorBody::new("payload_too_large", format!("request body exceeds {MAX_BODY_BYTES} bytes")),
            );
        }
        Err(rejection) => return error(StatusCode::BAD_REQUEST, ErrorBody::new("bad_request", rejection.body_text())),
    };
    let result = tokio::task::spawn_blocking(move || {
        let text = std::str::from_utf8(&bytes).map_err(|e| ErrorBody::new("malformed_json", e.to_string()))?;
        scorer.score_json(text)
    })
    .await;
    match result {
        Ok(Ok(response)) => Json(response).into_response(),
        Ok(Err(body)) => error(StatusCode::BAD_REQUEST, body),
        Err(join) => error(
            StatusCode::INTERNAL_SERVER_ERROR,
            ErrorBody::new("internal", join.to_string()),
        ),
    }
}

/// Binds `addr` and serves until Ctrl-C.
pub async fn serve(scorer: Arc<Scorer>, addr: SocketAddr, cors: CorsLayer) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(scorer, cors))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
