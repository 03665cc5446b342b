//! Service configuration: a TOML file, then `FAQ_ASSIST_*` environment
//! variables on top.

use std::path::{Path, PathBuf};

use faq_assist::retrieval::{EmbeddingSource, RankerKind};
use serde::Deserialize;

use crate::ServerError;

pub const DEFAULT_LISTEN: &str = "127.0.0.1:8080";

/// Environment variable for each config key.
pub const ENV_KEYS: [(&str, &str); 7] = [
    ("ranker", "FAQ_ASSIST_RANKER"),
    ("faqs", "FAQ_ASSIST_FAQS"),
    ("corpus", "FAQ_ASSIST_CORPUS"),
    ("embeddings", "FAQ_ASSIST_EMBEDDINGS"),
    ("projects", "FAQ_ASSIST_PROJECTS"),
    ("listen", "FAQ_ASSIST_LISTEN"),
    ("event_log", "FAQ_ASSIST_EVENT_LOG"),
];

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServerConfig {
    #[serde(default = "default_ranker")]
    pub ranker: RankerKind,
    pub faqs: PathBuf,
    #[serde(default)]
    pub corpus: Option<PathBuf>,
    /// Sidecar path or `hashing:<dim>`.
    #[serde(default)]
    pub embeddings: Option<String>,
    #[serde(default)]
    pub projects: Option<PathBuf>,
    #[serde(default = "default_listen")]
    pub listen: String,
    /// JSONL event log; existing records are replayed at startup.
    #[serde(default)]
    pub event_log: Option<PathBuf>,
}

fn default_ranker() -> RankerKind {
    RankerKind::Bm25
}

fn default_listen() -> String {
    DEFAULT_LISTEN.to_string()
}

impl ServerConfig {
    pub fn new(ranker: RankerKind, faqs: impl Into<PathBuf>) -> Self {
        ServerConfig {
            ranker,
            faqs: faqs.into(),
            corpus: None,
            embeddings: None,
            projects: None,
            listen: default_listen(),
            event_log: None,
        }
    }

    /// Reads `path` if given, then applies overrides looked up through `env`.
    pub fn load(
        path: Option<&Path>,
        env: impl Fn(&str) -> Option<String>,
    ) -> Result<Self, ServerError> {
        let mut table = match path {
            Some(p) => {
                let raw = std::fs::read_to_string(p).map_err(|source| ServerError::Io {
                    path: p.to_path_buf(),
                    source,
                })?;
                raw.parse::<toml::Table>()
                    .map_err(|e| ServerError::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for (key, var) in ENV_KEYS {
            if let Some(value) = env(var) {
                table.insert(key.to_string(), toml::Value::String(value));
            }
        }
        let config: ServerConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| ServerError::Config(e.message().to_string()))?;
        config.embedding_source()?;
        Ok(config)
    }

    pub fn from_env(path: Option<&Path>) -> Result<Self, ServerError> {
        Self::load(path, |k| std::env::var(k).ok())
    }

    pub fn embedding_source(&self) -> Result<Option<EmbeddingSource>, ServerError> {
        let source = self
            .embeddings
            .as_deref()
            .map(str::parse::<EmbeddingSource>)
            .transpose()?;
        if self.ranker == RankerKind::Dense && source.is_none() {
            return Err(ServerError::Config(
                "ranker = \"dense\" needs `embeddings`".into(),
            ));
        }
        Ok(source)
    }
}
