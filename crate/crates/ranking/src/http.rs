//! HTTP API.
//!
//! | method | path | body / reply |
//! |---|---|---|
//! | GET | `/health` | `{"status":"ok","version":..}` |
//! | POST | `/submissions` | `{"user","scenario","artifact"}` → 201 `{"id","status":"pending"}` |
//! | GET | `/submissions/{id}` | submission record |
//! | POST | `/rounds` | `{"scenario","episodes"?,"weight"?}` → round result |
//! | GET | `/ranking?scenario=KEY` | ordered ranking rows |
//! | GET | `/matches/{id}/replay` | replay file bytes (JSON lines) |
//! | GET | `/matches/{id}/stats` | match record plus replay event counts |
//!
//! Errors reply `{"error": message}` with 400, 404, 409, 422 or 500.

use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use tokio::sync::mpsc;

use crate::{RankingError, RankingService, SERVICE_VERSION};

impl IntoResponse for RankingError {
    fn into_response(self) -> Response {
        let code = match &self {
            RankingError::NotFound(_) | RankingError::UnknownScenario(_) => StatusCode::NOT_FOUND,
            RankingError::Fingerprint { .. } | RankingError::Artifact(_) => StatusCode::UNPROCESSABLE_ENTITY,
            RankingError::TooFew(_) => StatusCode::CONFLICT,
            RankingError::BadRequest(_) => StatusCode::BAD_REQUEST,
            RankingError::Simulation(_) | RankingError::Corrupt(_) | RankingError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (code, Json(json!({ "error": self.to_string() }))).into_response()
    }
}

#[derive(Clone)]
struct AppState {
    service: Arc<RankingService>,
    placements: mpsc::UnboundedSender<String>,
}

#[derive(Deserialize)]
struct SubmitBody {
    #[serde(default)]
    user: String,
    scenario: String,
    artifact: String,
}

#[derive(Deserialize)]
struct RoundBody {
    scenario: String,
    #[serde(default = "default_episodes")]
    episodes: u64,
    #[serde(default = "default_weight")]
    weight: f64,
}

fn default_episodes() -> u64 {
    10
}

fn default_weight() -> f64 {
    1.0
}

#[derive(Deserialize)]
struct RankingQuery {
    scenario: String,
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, RankingError> + Send + 'static) -> Result<T, RankingError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| RankingError::Simulation(e.to_string()))?
}

async fn health() -> impl IntoResponse {
    Json(json!({ "status": "ok", "version": SERVICE_VERSION }))
}

async fn submit(State(app): State<AppState>, Json(body): Json<SubmitBody>) -> Result<Response, RankingError> {
    let service = app.service.clone();
    let sub = blocking(move || service.submit(&body.user, &body.scenario, &body.artifact)).await?;
    // Placement is deferred to the background queue.
    let _ = app.placements.send(sub.id.clone());
    Ok((StatusCode::CREATED, Json(json!({ "id": sub.id, "status": sub.status }))).into_response())
}

async fn submission(State(app): State<AppState>, Path(id): Path<String>) -> Result<Response, RankingError> {
    Ok(Json(app.service.submission(&id)?).into_response())
}

async fn round(State(app): State<AppState>, Json(body): Json<RoundBody>) -> Result<Response, RankingError> {
    let service = app.service.clone();
    let r = blocking(move || service.run_round(&body.scenario, body.episodes, body.weight)).await?;
    Ok(Json(r).into_response())
}

async fn ranking(State(app): State<AppState>, Query(q): Query<RankingQuery>) -> Result<Response, RankingError> {
    Ok(Json(app.service.ranking(&q.scenario)?).into_response())
}

async fn replay(State(app): State<AppState>, Path(id): Path<String>) -> Result<Response, RankingError> {
    let bytes = app.service.replay(&id)?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], bytes).into_response())
}

async fn stats(State(app): State<AppState>, Path(id): Path<String>) -> Result<Response, RankingError> {
    let service = app.service.clone();
    Ok(Json(blocking(move || service.stats(&id)).await?).into_response())
}

/// Runs placements one at a time as submissions arrive.
pub fn spawn_placement_worker(service: Arc<RankingService>) -> mpsc::UnboundedSender<String> {
    let (tx, mut rx) = mpsc::unbounded_channel::<String>();
    tokio::spawn(async move {
        while let Some(id) = rx.recv().await {
            let s = service.clone();
            match tokio::task::spawn_blocking(move || s.place(&id)).await {
                Ok(Ok(_)) => {}
                Ok(Err(e)) => log::warn!("placement failed: {e}"),
                Err(e) => log::warn!("placement task failed: {e}"),
            }
        }
    });
    tx
}

/// The API router. `placements` receives the id of every new submission.
pub fn router(service: Arc<RankingService>, placements: mpsc::UnboundedSender<String>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/submissions", post(submit))
        .route("/submissions/{id}", get(submission))
        .route("/rounds", post(round))
        .route("/ranking", get(ranking))
        .route("/matches/{id}/replay", get(replay))
        .route("/matches/{id}/stats", get(stats))
        .with_state(AppState { service, placements })
}

/// Serves until ctrl-c or SIGTERM, then writes a snapshot.
pub async fn serve(service: Arc<RankingService>, listener: tokio::net::TcpListener) -> Result<(), RankingError> {
    let tx = spawn_placement_worker(service.clone());
    let app = router(service.clone(), tx);
    axum::serve(listener, app).with_graceful_shutdown(shutdown_signal()).await?;
    service.snapshot()?;
    log::info!("snapshot written, shutting down");
    Ok(())
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        if let Ok(mut s) = tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            s.recv().await;
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
}
