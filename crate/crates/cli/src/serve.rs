//! HTTP guardrail: `POST /verify` scores one request, `GET /health` reports
//! liveness. Verification runs on the blocking pool behind a semaphore.

use std::future::Future;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use hallugraph_core::audit::{render_report, ReportFormat};
use hallugraph_core::pipeline::{Verifier, VerifyRequest};
use serde_json::json;
use tokio::net::TcpListener;
use tokio::sync::Semaphore;

#[derive(Clone)]
pub struct AppState {
    verifier: Arc<Verifier>,
    permits: Arc<Semaphore>,
}

impl AppState {
    pub fn new(verifier: Verifier, workers: usize) -> Self {
        AppState { verifier: Arc::new(verifier), permits: Arc::new(Semaphore::new(workers.max(1))) }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new().route("/verify", post(verify)).route("/health", get(health)).with_state(state)
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, axum::Json(json!({ "error": message.into() }))).into_response()
}

async fn health() -> Response {
    axum::Json(json!({ "status": "ok" })).into_response()
}

async fn verify(State(state): State<AppState>, body: Bytes) -> Response {
    let req: VerifyRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("malformed request: {e}")),
    };
    let Ok(_permit) = state.permits.clone().acquire_owned().await else {
        return error(StatusCode::SERVICE_UNAVAILABLE, "service is shutting down");
    };
    let verifier = state.verifier.clone();
    let outcome = tokio::task::spawn_blocking(move || verifier.verify(&req)).await;
    match outcome {
        Ok(Ok(v)) => (
            StatusCode::OK,
            [(header::CONTENT_TYPE, "application/json")],
            render_report(&v.decision, ReportFormat::Json),
        )
            .into_response(),
        Ok(Err(e)) if e.is_backend_failure() => error(StatusCode::BAD_GATEWAY, e.to_string()),
        Ok(Err(e)) => error(StatusCode::BAD_REQUEST, e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, format!("verification task failed: {e}")),
    }
}

/// Serves until `shutdown` resolves, then drains in-flight requests.
pub async fn run(
    listener: TcpListener,
    state: AppState,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}

pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}

pub fn serve_blocking(addr: SocketAddr, state: AppState) -> anyhow::Result<()> {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let listener = TcpListener::bind(addr).await?;
        eprintln!("listening on {}", listener.local_addr()?);
        run(listener, state, shutdown_signal()).await?;
        Ok(())
    })
}
