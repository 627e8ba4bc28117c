//! HTTP service for drillboards: a document store with single-writer
//! revisions, server-side reader sessions, and the JSON API over both.

pub mod api;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

pub use api::router;
pub use store::{Store, StoreError};

/// Environment variable naming a directory of static web client files.
pub const WEBUI_DIR_ENV: &str = "DRILLBOARDS_WEBUI_DIR";

pub fn webui_dir_from_env() -> Option<PathBuf> {
    std::env::var_os(WEBUI_DIR_ENV)
        .map(PathBuf::from)
        .filter(|p| p.is_dir())
}

/// Serves the API until Ctrl-C.
pub async fn serve(store: Arc<Store>, addr: SocketAddr, webui: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(store, webui))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
