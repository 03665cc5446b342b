//! Query/passage construction and the four rankers.
//!
//! Every ranker returns at most [`DEFAULT_TOP_K`] suggestions with distinct
//! classes, sorted by score descending. Ties break silence-first, then by
//! ascending FAQ id.

mod baseline;
mod bm25;
mod dense;
mod factory;
mod query;
mod tokenize;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::class::CandidateClass;

pub use baseline::{rank_dumb, rank_random, DumbRanker, RandomRanker, RANDOM_LIST_LEN};
pub use bm25::{rank_bm25, Bm25Index, Bm25Params, Bm25Ranker};
pub use dense::{
    query_key, rank_dense, Candidate, DenseConfig, DenseIndex, DenseRanker, EmbeddingProvider,
    HashingProvider, SidecarProvider,
};
pub use factory::{build_ranker, EmbeddingSource};
pub use query::{
    build_passage, build_query, build_query_with_window, Passage, Query, DEFAULT_WINDOW,
};
pub use tokenize::tokenize;

/// Length of every ranked list.
pub const DEFAULT_TOP_K: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum RetrievalError {
    #[error("position {position} is outside a history of {len} utterance(s)")]
    PositionOutOfRange { position: usize, len: usize },
    #[error("cannot build a BM25 index over an empty FAQ database")]
    EmptyDatabase,
    #[error("random ranking needs at least {needed} classes, got {available}")]
    TooFewClasses { needed: usize, available: usize },
    #[error("embedding for {key} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        key: String,
        expected: usize,
        found: usize,
    },
    #[error("no embedding for {0}")]
    MissingEmbedding(String),
    #[error("embedding sidecar line {line}: {message}")]
    Sidecar { line: usize, message: String },
    #[error("the dense ranker needs an embeddings source")]
    EmbeddingsRequired,
    #[error("invalid embeddings source {0:?} (expected a sidecar path or hashing:<dim>)")]
    InvalidEmbeddingSource(String),
    #[error("unknown ranker {0:?} (expected dumb, random, bm25 or dense)")]
    UnknownRanker(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One entry of a ranked list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedSuggestion {
    pub class: CandidateClass,
    pub score: f64,
    /// Display confidence, 0-100.
    pub percent: u8,
}

/// Ranks candidate classes for one query window.
///
/// `seed` is only consumed by stochastic rankers; deterministic rankers
/// ignore it.
pub trait Ranker: Send + Sync {
    fn name(&self) -> &str;

    fn rank(&self, query: &Query, seed: u64) -> Result<Vec<RankedSuggestion>, RetrievalError>;
}

impl<R: Ranker + ?Sized> Ranker for Box<R> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn rank(&self, query: &Query, seed: u64) -> Result<Vec<RankedSuggestion>, RetrievalError> {
        (**self).rank(query, seed)
    }
}

/// Ranker selection string used by the CLI and service config.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankerKind {
    Dumb,
    Random,
    Bm25,
    Dense,
}

impl fmt::Display for RankerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RankerKind::Dumb => "dumb",
            RankerKind::Random => "random",
            RankerKind::Bm25 => "bm25",
            RankerKind::Dense => "dense",
        })
    }
}

impl FromStr for RankerKind {
    type Err = RetrievalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dumb" => Ok(RankerKind::Dumb),
            "random" => Ok(RankerKind::Random),
            "bm25" => Ok(RankerKind::Bm25),
            "dense" => Ok(RankerKind::Dense),
            other => Err(RetrievalError::UnknownRanker(other.to_string())),
        }
    }
}

/// Sorts scored candidates (score desc, then class order), keeps `top_k`
/// and fills in display percentages.
pub(crate) fn finish_ranking(
    mut scored: Vec<(CandidateClass, f64)>,
    top_k: usize,
) -> Vec<RankedSuggestion> {
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(top_k);
    let scores: Vec<f64> = scored.iter().map(|(_, s)| *s).collect();
    scored
        .into_iter()
        .zip(score_to_percent(&scores))
        .map(|((class, score), percent)| RankedSuggestion {
            class,
            score,
            percent,
        })
        .collect()
}

/// Softmax over the listed scores, scaled to 100 and rounded half-up.
pub fn score_to_percent(scores: &[f64]) -> Vec<u8> {
    let Some(max) = scores.iter().copied().reduce(f64::max) else {
        return Vec::new();
    };
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter()
        .map(|e| (e / total * 100.0 + 0.5).floor().clamp(0.0, 100.0) as u8)
        .collect()
}
