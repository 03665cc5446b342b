//! Shared service state: immutable FAQ data and ranker, one lock per session,
//! and the append-only event log.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use chrono::Utc;
use faq_assist::corpus::{read_corpus, read_faqs, FaqDatabase};
use faq_assist::project::{read_projects, Project};
use faq_assist::retrieval::{build_ranker, DenseConfig, Ranker};
use faq_assist::session::{replay_log, LogRecord, Session, SessionError};

use crate::config::ServerConfig;
use crate::ServerError;

pub struct AppState {
    pub faqs: FaqDatabase,
    pub ranker: Box<dyn Ranker>,
    pub projects: Vec<Project>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    log: Option<EventLog>,
}

struct EventLog {
    path: PathBuf,
    file: Mutex<File>,
}

/// Failure of a command against one session.
#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("writing event log {path}: {source}")]
    Log {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl AppState {
    pub fn new(faqs: FaqDatabase, ranker: Box<dyn Ranker>, projects: Vec<Project>) -> Self {
        AppState {
            faqs,
            ranker,
            projects,
            sessions: RwLock::new(HashMap::new()),
            log: None,
        }
    }

    /// Loads every input named by `config` and restores sessions from an
    /// existing event log.
    pub fn from_config(config: &ServerConfig) -> Result<Self, ServerError> {
        let faqs = read_faqs(&config.faqs)?;
        if let Some(path) = &config.corpus {
            for conv in read_corpus(path)? {
                conv.check_gold(&faqs)?;
            }
        }
        let projects = match &config.projects {
            Some(p) => read_projects(p)?,
            None => Vec::new(),
        };
        let source = config.embedding_source()?;
        let ranker = build_ranker(
            config.ranker,
            &faqs,
            source.as_ref(),
            DenseConfig::default(),
        )?;
        let mut state = AppState::new(faqs, ranker, projects);
        if let Some(path) = &config.event_log {
            state.attach_log(path)?;
        }
        Ok(state)
    }

    /// Replays `path` if it exists, then appends every new record to it.
    pub fn attach_log(&mut self, path: &Path) -> Result<(), ServerError> {
        let io_err = |source| ServerError::Io {
            path: path.to_path_buf(),
            source,
        };
        if path.exists() {
            let reader = BufReader::new(File::open(path).map_err(io_err)?);
            let mut records = Vec::new();
            for (i, line) in reader.lines().enumerate() {
                let line = line.map_err(io_err)?;
                if line.trim().is_empty() {
                    continue;
                }
                let record: LogRecord = serde_json::from_str(&line).map_err(|e| {
                    ServerError::Config(format!("{}:{}: {e}", path.display(), i + 1))
                })?;
                records.push(record);
            }
            let restored = replay_log(records)?;
            let mut sessions = self.sessions.write().expect("session map poisoned");
            for (id, session) in restored {
                sessions.insert(id, Arc::new(Mutex::new(session)));
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(io_err)?;
        self.log = Some(EventLog {
            path: path.to_path_buf(),
            file: Mutex::new(file),
        });
        Ok(())
    }

    pub fn create_session(&self) -> String {
        let id = uuid::Uuid::new_v4().simple().to_string();
        self.sessions
            .write()
            .expect("session map poisoned")
            .insert(id.clone(), Arc::new(Mutex::new(Session::new(id.clone()))));
        id
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().expect("session map poisoned").len()
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, CommandError> {
        self.sessions
            .read()
            .expect("session map poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| CommandError::UnknownSession(id.to_string()))
    }

    /// Runs a read-only view of one session.
    pub fn read<T>(&self, id: &str, f: impl FnOnce(&Session) -> T) -> Result<T, CommandError> {
        let session = self.session(id)?;
        let guard = session.lock().expect("session poisoned");
        Ok(f(&guard))
    }

    /// Runs a command against one session while holding its lock, then
    /// persists whatever records the command appended.
    pub fn command<T>(
        &self,
        id: &str,
        f: impl FnOnce(&mut Session, &AppState, chrono::DateTime<Utc>) -> Result<T, SessionError>,
    ) -> Result<T, CommandError> {
        let session = self.session(id)?;
        let mut guard = session.lock().expect("session poisoned");
        let before = guard.log().len();
        let out = f(&mut guard, self, Utc::now())?;
        if let Some(log) = &self.log {
            let mut file = log.file.lock().expect("event log poisoned");
            let mut buf = String::new();
            for record in &guard.log()[before..] {
                buf.push_str(&serde_json::to_string(record).expect("log records serialize"));
                buf.push('\n');
            }
            file.write_all(buf.as_bytes())
                .and_then(|_| file.flush())
                .map_err(|source| CommandError::Log {
                    path: log.path.clone(),
                    source,
                })?;
        }
        Ok(out)
    }
}
