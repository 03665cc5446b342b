//! HTTP service behind the agent console.

pub mod api;
pub mod config;
pub mod state;

use std::path::PathBuf;
use std::sync::Arc;

use faq_assist::corpus::CorpusError;
use faq_assist::project::ProjectError;
use faq_assist::retrieval::RetrievalError;
use faq_assist::session::SessionError;
use tokio::net::TcpListener;

pub use api::router;
pub use config::ServerConfig;
pub use state::AppState;

/// Startup failures.
#[derive(Debug, thiserror::Error)]
pub enum ServerError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Project(#[from] ProjectError),
    #[error("event log replay: {0}")]
    Replay(#[from] SessionError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot listen on {addr}: {source}")]
    Bind {
        addr: String,
        source: std::io::Error,
    },
}

impl ServerError {
    /// Configuration problems as opposed to bad input data.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            ServerError::Config(_)
                | ServerError::Bind { .. }
                | ServerError::Retrieval(RetrievalError::EmbeddingsRequired)
                | ServerError::Retrieval(RetrievalError::InvalidEmbeddingSource(_))
        )
    }
}

/// Binds the configured address, loading all inputs first.
pub async fn bind(config: &ServerConfig) -> Result<(TcpListener, AppState), ServerError> {
    let state = AppState::from_config(config)?;
    let listener = TcpListener::bind(&config.listen)
        .await
        .map_err(|source| ServerError::Bind {
            addr: config.listen.clone(),
            source,
        })?;
    Ok((listener, state))
}

pub async fn run(listener: TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(Arc::new(state))).await
}
