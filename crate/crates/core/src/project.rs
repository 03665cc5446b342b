//! Keyword-based project recommendations from the customer's messages.

use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::retrieval::tokenize;

#[derive(Debug, thiserror::Error)]
pub enum ProjectError {
    #[error("project {0} has no keywords")]
    NoKeywords(u32),
    #[error("project {id}: keyword {keyword:?} is not a single term")]
    InvalidKeyword { id: u32, keyword: String },
    #[error("duplicate project id {0}")]
    DuplicateId(u32),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: std::path::PathBuf,
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Project {
    pub id: u32,
    pub title: String,
    /// Normalised single terms, folded the same way as message tokens.
    pub keywords: BTreeSet<String>,
    pub description: String,
}

impl Project {
    pub fn new(
        id: u32,
        title: impl Into<String>,
        keywords: impl IntoIterator<Item = impl AsRef<str>>,
        description: impl Into<String>,
    ) -> Result<Self, ProjectError> {
        let mut normalised = BTreeSet::new();
        for k in keywords {
            let tokens = tokenize(k.as_ref());
            match tokens.as_slice() {
                [term] => {
                    normalised.insert(term.clone());
                }
                _ => {
                    return Err(ProjectError::InvalidKeyword {
                        id,
                        keyword: k.as_ref().to_string(),
                    })
                }
            }
        }
        if normalised.is_empty() {
            return Err(ProjectError::NoKeywords(id));
        }
        Ok(Project {
            id,
            title: title.into(),
            keywords: normalised,
            description: description.into(),
        })
    }
}

/// Loads a JSON array of projects, normalising keywords.
pub fn read_projects(path: &Path) -> Result<Vec<Project>, ProjectError> {
    let raw = std::fs::read_to_string(path).map_err(|source| ProjectError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let parsed: Vec<Project> = serde_json::from_str(&raw).map_err(|source| ProjectError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    let mut seen = HashSet::new();
    parsed
        .into_iter()
        .map(|p| {
            if !seen.insert(p.id) {
                return Err(ProjectError::DuplicateId(p.id));
            }
            Project::new(p.id, p.title, p.keywords, p.description)
        })
        .collect()
}

/// Projects whose keywords occur among the tokens of `customer_texts`,
/// by descending number of matched keywords, then ascending id.
pub fn match_projects<'p, 't>(
    customer_texts: impl IntoIterator<Item = &'t str>,
    projects: &'p [Project],
) -> Vec<&'p Project> {
    let tokens: HashSet<String> = customer_texts.into_iter().flat_map(tokenize).collect();
    let mut hits: Vec<(usize, &Project)> = projects
        .iter()
        .map(|p| (p.keywords.iter().filter(|k| tokens.contains(*k)).count(), p))
        .filter(|(n, _)| *n > 0)
        .collect();
    hits.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.id.cmp(&b.1.id)));
    hits.into_iter().map(|(_, p)| p).collect()
}
