//! Reference baselines: a constant silence-first list and a uniform random
//! list.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{score_to_percent, Query, RankedSuggestion, Ranker, RetrievalError};
use crate::class::{CandidateClass, FaqId};

/// Length of the dumb and random lists.
pub const RANDOM_LIST_LEN: usize = 10;

// Scores are synthetic: position 1 gets 10, position 10 gets 1.
fn positional(classes: Vec<CandidateClass>) -> Vec<RankedSuggestion> {
    let n = classes.len();
    let scores: Vec<f64> = (0..n).map(|i| (n - i) as f64).collect();
    let percents = score_to_percent(&scores);
    classes
        .into_iter()
        .zip(scores)
        .zip(percents)
        .map(|((class, score), percent)| RankedSuggestion {
            class,
            score,
            percent,
        })
        .collect()
}

/// `[no-suggestion, 1, 2, ..., 9]` regardless of input.
pub fn rank_dumb() -> Vec<RankedSuggestion> {
    let classes = std::iter::once(CandidateClass::NoSuggestion)
        .chain(
            (1..RANDOM_LIST_LEN as u32).map(|n| CandidateClass::Faq(FaqId::new(n).expect("n > 0"))),
        )
        .collect();
    positional(classes)
}

/// Ten distinct classes drawn uniformly without replacement.
pub fn rank_random(
    classes: &[CandidateClass],
    rng_seed: u64,
) -> Result<Vec<RankedSuggestion>, RetrievalError> {
    let mut pool = classes.to_vec();
    pool.sort();
    pool.dedup();
    if pool.len() < RANDOM_LIST_LEN {
        return Err(RetrievalError::TooFewClasses {
            needed: RANDOM_LIST_LEN,
            available: pool.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let picked = rand::seq::index::sample(&mut rng, pool.len(), RANDOM_LIST_LEN)
        .into_iter()
        .map(|i| pool[i])
        .collect();
    Ok(positional(picked))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DumbRanker;

impl Ranker for DumbRanker {
    fn name(&self) -> &str {
        "dumb"
    }

    fn rank(&self, _query: &Query, _seed: u64) -> Result<Vec<RankedSuggestion>, RetrievalError> {
        Ok(rank_dumb())
    }
}

#[derive(Debug, Clone)]
pub struct RandomRanker {
    classes: Vec<CandidateClass>,
}

impl RandomRanker {
    pub fn new(classes: Vec<CandidateClass>) -> Result<Self, RetrievalError> {
        rank_random(&classes, 0)?;
        Ok(RandomRanker { classes })
    }
}

impl Ranker for RandomRanker {
    fn name(&self) -> &str {
        "random"
    }

    fn rank(&self, _query: &Query, seed: u64) -> Result<Vec<RankedSuggestion>, RetrievalError> {
        rank_random(&self.classes, seed)
    }
}
