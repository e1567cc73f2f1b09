//! HTTP service over the scoring engine: upload corpora and training sets,
//! clone and edit training sets, run scoring jobs through a queue, fetch and
//! compare results. Everything is kept in a file-backed store.

pub mod api;
pub mod app;
pub mod error;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;

pub use api::router;
pub use app::{App, CorpusUpload, DocumentUpload, Edit, JobRequest};
pub use error::{ApiError, StoreError};
pub use store::{JobRecord, JobState, Manifest, Store};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    pub data_dir: PathBuf,
    /// Jobs run one at a time unless this is raised.
    pub workers: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            listen: SocketAddr::from(([127, 0, 0, 1], 8080)),
            data_dir: PathBuf::from("textscale-data"),
            workers: 1,
        }
    }
}

impl ServiceConfig {
    /// Reads `TEXTSCALE_LISTEN`, `TEXTSCALE_DATA_DIR` and `TEXTSCALE_WORKERS`,
    /// falling back to the defaults.
    pub fn from_env() -> Result<Self, String> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, String> {
        let mut config = ServiceConfig::default();
        if let Some(v) = get("TEXTSCALE_LISTEN") {
            config.listen = v.parse().map_err(|e| format!("TEXTSCALE_LISTEN={v:?}: {e}"))?;
        }
        if let Some(v) = get("TEXTSCALE_DATA_DIR") {
            config.data_dir = PathBuf::from(v);
        }
        if let Some(v) = get("TEXTSCALE_WORKERS") {
            config.workers = match v.parse() {
                Ok(n) if n >= 1 => n,
                _ => return Err(format!("TEXTSCALE_WORKERS={v:?}: expected a positive integer")),
            };
        }
        Ok(config)
    }
}

/// Serves until ctrl-c.
pub async fn serve(config: ServiceConfig) -> std::io::Result<()> {
    let app = App::open(&config.data_dir, config.workers).map_err(std::io::Error::other)?;
    let listener = tokio::net::TcpListener::bind(config.listen).await?;
    tracing::info!(addr = %listener.local_addr()?, data_dir = %config.data_dir.display(), "listening");
    axum::serve(listener, router(app))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
