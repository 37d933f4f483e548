//! HTTP transport: `POST /soap` and `GET /healthz`, graceful shutdown, and a
//! background task that picks up snapshot and token files replaced on disk.

use std::future::Future;
use std::net::SocketAddr;
use std::path::Path;
use std::time::{Duration, SystemTime};

use axum::body::Bytes;
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::Router;
use bib_core::wire::CONTENT_TYPE;
use tokio::net::TcpListener;

use crate::datadir::DataDir;
use crate::error::{StoreError, SwapError};
use crate::service::Service;

pub const SOAP_PATH: &str = "/soap";
pub const HEALTH_PATH: &str = "/healthz";

pub fn router(service: Service) -> Router {
    Router::new()
        .route(SOAP_PATH, post(soap))
        .route(HEALTH_PATH, get(|| async { "ok" }))
        .with_state(service)
}

async fn soap(
    axum::extract::State(service): axum::extract::State<Service>,
    headers: HeaderMap,
    body: Bytes,
) -> impl IntoResponse {
    let action = headers.get("SOAPAction").map(|v| v.to_str().unwrap_or("\u{0}"));
    let reply = service.dispatch(action, &body);
    let status = StatusCode::from_u16(reply.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    (status, [(header::CONTENT_TYPE, CONTENT_TYPE)], reply.body)
}

/// Serves `app` until `shutdown` resolves, then lets in-flight requests
/// finish.
pub async fn serve(
    listener: TcpListener,
    app: Router,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}

/// Resolves on SIGTERM or Ctrl-C.
pub async fn termination() {
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
        _ = ctrl_c => {}
        _ = term => {}
    }
    tracing::info!("shutdown requested");
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub port: u16,
    pub data: DataDir,
    /// How often the data files are checked for replacement; `None` disables
    /// reloading.
    pub reload_every: Option<Duration>,
}

impl ServeConfig {
    pub fn new(port: u16, data: DataDir) -> Self {
        ServeConfig { port, data, reload_every: Some(Duration::from_secs(2)) }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("cannot listen on port {port}: {source}")]
    Bind { port: u16, source: std::io::Error },
    #[error("server failed: {0}")]
    Io(#[from] std::io::Error),
}

/// Runs the service until terminated. `on_ready` receives the bound address
/// once the listener is up.
pub fn run(config: ServeConfig, on_ready: impl FnOnce(SocketAddr)) -> Result<(), ServeError> {
    let service = config.data.open_service()?;
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(async move {
        let listener = TcpListener::bind(("0.0.0.0", config.port))
            .await
            .map_err(|source| ServeError::Bind { port: config.port, source })?;
        let addr = listener.local_addr()?;
        tracing::info!(%addr, "listening");
        on_ready(addr);
        if let Some(every) = config.reload_every {
            tokio::spawn(reload_loop(service.clone(), config.data.clone(), every));
        }
        serve(listener, router(service), termination()).await?;
        Ok(())
    })
}

fn modified(path: &Path) -> Option<SystemTime> {
    std::fs::metadata(path).and_then(|m| m.modified()).ok()
}

async fn reload_loop(service: Service, data: DataDir, every: Duration) {
    let snapshot_path = data.snapshot_path();
    let mut seen_snapshot = modified(&snapshot_path);
    let mut seen_tokens = modified(data.tokens_path());
    let mut ticker = tokio::time::interval(every);
    loop {
        ticker.tick().await;
        let now = modified(&snapshot_path);
        if now != seen_snapshot {
            seen_snapshot = now;
            match data.load_snapshot() {
                Ok(Some(s)) => match service.swap_snapshot(s) {
                    Ok(_) | Err(SwapError::StaleImport { .. }) => {}
                    Err(e) => tracing::warn!(%e, "installed snapshot rejected"),
                },
                Ok(None) => {}
                Err(e) => tracing::warn!(%e, "cannot reload snapshot"),
            }
        }
        let now = modified(data.tokens_path());
        if now != seen_tokens {
            seen_tokens = now;
            match data.load_tokens() {
                Ok(Some(t)) => service.replace_tokens(t),
                Ok(None) => {}
                Err(e) => tracing::warn!(%e, "cannot reload token table"),
            }
        }
    }
}
