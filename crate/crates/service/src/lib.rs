//! HTTP facade over ring generation: create rings from (partial) specs,
//! fetch their sketches, translate sketches to renders with a trained
//! generator, and download the swept tube mesh.
//!
//! Each ring lives in its own directory under `<data-dir>/rings/<id>/` as a
//! `record.json` plus PNG and STL blobs, so a restarted service serves the
//! same bytes. Named checkpoints are looked up in `<data-dir>/checkpoints/`.

mod api;
mod config;
mod error;
mod state;
mod store;

pub use api::router;
pub use config::ServiceConfig;
pub use error::{Result, ServiceError};
pub use state::{AppState, Metrics};
pub use store::{RingFiles, RingRecord, Store};

use std::net::SocketAddr;
use std::sync::Arc;

/// Binds the configured address and serves until interrupted.
pub async fn serve(config: ServiceConfig) -> Result<()> {
    let addr = SocketAddr::new(config.host, config.port);
    let state = Arc::new(tokio::task::spawn_blocking(move || AppState::new(config)).await.map_err(
        |e| ServiceError::Config(format!("startup task failed: {e}")),
    )??);
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ServiceError::Bind { addr, source })?;
    tracing::info!(%addr, rings = state.store().len(), "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|source| ServiceError::Bind { addr, source })
}
