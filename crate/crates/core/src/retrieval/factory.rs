//! Builds a boxed ranker from a selection string and its inputs.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use super::{
    Bm25Index, Bm25Params, DenseConfig, DenseRanker, DumbRanker, HashingProvider, RandomRanker,
    Ranker, RankerKind, RetrievalError, SidecarProvider,
};
use crate::corpus::FaqDatabase;

/// Where dense vectors come from: a sidecar file, or `hashing:<dim>` for the
/// feature-hashing reference provider.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmbeddingSource {
    Sidecar(PathBuf),
    Hashing(usize),
}

impl FromStr for EmbeddingSource {
    type Err = RetrievalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.strip_prefix("hashing:") {
            Some(dim) => match dim.parse::<usize>() {
                Ok(d) if d > 0 => Ok(EmbeddingSource::Hashing(d)),
                _ => Err(RetrievalError::InvalidEmbeddingSource(s.to_string())),
            },
            None if s.is_empty() => Err(RetrievalError::InvalidEmbeddingSource(s.to_string())),
            None => Ok(EmbeddingSource::Sidecar(PathBuf::from(s))),
        }
    }
}

impl fmt::Display for EmbeddingSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmbeddingSource::Sidecar(p) => write!(f, "{}", p.display()),
            EmbeddingSource::Hashing(d) => write!(f, "hashing:{d}"),
        }
    }
}

pub fn build_ranker(
    kind: RankerKind,
    faqs: &FaqDatabase,
    embeddings: Option<&EmbeddingSource>,
    dense: DenseConfig,
) -> Result<Box<dyn Ranker>, RetrievalError> {
    Ok(match kind {
        RankerKind::Dumb => Box::new(DumbRanker),
        RankerKind::Random => Box::new(RandomRanker::new(faqs.all_classes())?),
        RankerKind::Bm25 => Box::new(super::Bm25Ranker::new(Bm25Index::build(
            faqs,
            Bm25Params::default(),
        )?)),
        RankerKind::Dense => match embeddings {
            None => return Err(RetrievalError::EmbeddingsRequired),
            Some(EmbeddingSource::Sidecar(path)) => {
                Box::new(DenseRanker::new(SidecarProvider::load(path)?, faqs, dense)?)
            }
            Some(EmbeddingSource::Hashing(dim)) => {
                Box::new(DenseRanker::new(HashingProvider::new(*dim), faqs, dense)?)
            }
        },
    })
}
