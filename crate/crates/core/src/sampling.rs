//! `no-suggestion` rebalancing for train/dev construction and training pair
//! export.
//!
//! Every FAQ-gold utterance is always kept. The number of silence
//! utterances kept depends on the setting:
//!
//! | setting        | silence target                                   |
//! |----------------|--------------------------------------------------|
//! | `mean`         | mean count per FAQ class, rounded half-up        |
//! | `highest-freq` | count of the most frequent FAQ class             |
//! | `sum`          | number of FAQ-gold utterances                    |
//! | `original`     | every silence utterance                          |
//!
//! The target is clamped to the silence utterances available.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::class::{CandidateClass, FaqId, NO_SUGGESTION};
use crate::corpus::{FaqDatabase, Utterance};
use crate::retrieval::{build_passage, build_query, RetrievalError};

#[derive(Debug, thiserror::Error)]
pub enum SamplingError {
    #[error("cannot plan sampling over an empty split")]
    EmptySplit,
    #[error("setting {0} needs at least one FAQ-annotated utterance")]
    NoFaqClasses(SamplingSetting),
    #[error("{requested} negative(s) requested but only {available} FAQ(s) exist; need fewer negatives than FAQs")]
    TooManyNegatives { requested: usize, available: usize },
    #[error("plan references utterance {0} which is not in the split")]
    UnknownUtterance(UtteranceRef),
    #[error("unknown FAQ id {0}")]
    UnknownFaq(FaqId),
    #[error("unknown sampling setting {0:?} (expected mean, highest-freq, sum or original)")]
    UnknownSetting(String),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingSetting {
    Mean,
    HighestFreq,
    Sum,
    Original,
}

impl SamplingSetting {
    pub const ALL: [SamplingSetting; 4] = [
        SamplingSetting::Mean,
        SamplingSetting::HighestFreq,
        SamplingSetting::Sum,
        SamplingSetting::Original,
    ];
}

impl fmt::Display for SamplingSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplingSetting::Mean => "mean",
            SamplingSetting::HighestFreq => "highest-freq",
            SamplingSetting::Sum => "sum",
            SamplingSetting::Original => "original",
        })
    }
}

impl FromStr for SamplingSetting {
    type Err = SamplingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SamplingSetting::ALL
            .into_iter()
            .find(|setting| setting.to_string() == s)
            .ok_or_else(|| SamplingError::UnknownSetting(s.to_string()))
    }
}

/// Points at one utterance of the corpus.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UtteranceRef {
    pub conversation_id: String,
    pub index: usize,
}

impl UtteranceRef {
    pub fn of(u: &Utterance) -> Self {
        UtteranceRef {
            conversation_id: u.conversation_id.clone(),
            index: u.index,
        }
    }
}

impl fmt::Display for UtteranceRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.conversation_id, self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub setting: SamplingSetting,
    pub seed: u64,
    /// Silence target before clamping.
    pub target: usize,
    /// Every FAQ-gold utterance, in split order.
    pub kept_faq: Vec<UtteranceRef>,
    /// Sampled silence utterances, in split order.
    pub kept_silence: Vec<UtteranceRef>,
}

impl SamplingPlan {
    pub fn len(&self) -> usize {
        self.kept_faq.len() + self.kept_silence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Exact histogram of gold classes.
pub fn class_counts(split: &[Utterance]) -> BTreeMap<CandidateClass, usize> {
    let mut counts = BTreeMap::new();
    for u in split {
        *counts.entry(u.gold).or_insert(0) += 1;
    }
    counts
}

/// Silence target for `setting` given the class histogram.
pub fn silence_target(
    counts: &BTreeMap<CandidateClass, usize>,
    setting: SamplingSetting,
) -> Result<usize, SamplingError> {
    let faq_counts: Vec<usize> = counts
        .iter()
        .filter(|(c, _)| !c.is_silence())
        .map(|(_, n)| *n)
        .collect();
    if setting == SamplingSetting::Original {
        return Ok(counts
            .get(&CandidateClass::NoSuggestion)
            .copied()
            .unwrap_or(0));
    }
    if faq_counts.is_empty() {
        return Err(SamplingError::NoFaqClasses(setting));
    }
    let total: usize = faq_counts.iter().sum();
    Ok(match setting {
        SamplingSetting::Mean => {
            let k = faq_counts.len();
            (2 * total + k) / (2 * k)
        }
        SamplingSetting::HighestFreq => faq_counts.iter().copied().max().unwrap_or(0),
        SamplingSetting::Sum => total,
        SamplingSetting::Original => unreachable!(),
    })
}

pub fn plan_sampling(
    split: &[Utterance],
    setting: SamplingSetting,
    seed: u64,
) -> Result<SamplingPlan, SamplingError> {
    if split.is_empty() {
        return Err(SamplingError::EmptySplit);
    }
    let target = silence_target(&class_counts(split), setting)?;
    let (silence, faq): (Vec<&Utterance>, Vec<&Utterance>) =
        split.iter().partition(|u| u.gold.is_silence());
    let keep = target.min(silence.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, silence.len(), keep).into_vec();
    picked.sort_unstable();
    Ok(SamplingPlan {
        setting,
        seed,
        target,
        kept_faq: faq.into_iter().map(UtteranceRef::of).collect(),
        kept_silence: picked
            .into_iter()
            .map(|i| UtteranceRef::of(silence[i]))
            .collect(),
    })
}

/// One fine-tuning example for an external dual encoder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub query: String,
    pub positive: String,
    pub negatives: Vec<String>,
}

/// One pair per planned utterance, in split order. Negatives are drawn
/// uniformly without replacement from the FAQs other than the gold one; for
/// silence utterances the positive is the literal `no-suggestion` and all
/// FAQs are eligible negatives.
pub fn export_training_pairs(
    plan: &SamplingPlan,
    split: &[Utterance],
    faqs: &FaqDatabase,
    num_negatives: usize,
    seed: u64,
) -> Result<Vec<TrainingPair>, SamplingError> {
    if num_negatives >= faqs.len() {
        return Err(SamplingError::TooManyNegatives {
            requested: num_negatives,
            available: faqs.len(),
        });
    }
    let planned: HashSet<&UtteranceRef> = plan.kept_faq.iter().chain(&plan.kept_silence).collect();
    let passages: Vec<(FaqId, String)> = faqs
        .items()
        .iter()
        .map(|f| (f.id, build_passage(f).text))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(planned.len());
    let mut found = 0;

    for (pos, u) in split.iter().enumerate() {
        if !planned.contains(&UtteranceRef::of(u)) {
            continue;
        }
        found += 1;
        let query = build_query(split, pos)?.text;
        let (positive, pool): (String, Vec<&String>) = match u.gold {
            CandidateClass::NoSuggestion => (
                NO_SUGGESTION.to_string(),
                passages.iter().map(|(_, t)| t).collect(),
            ),
            CandidateClass::Faq(gold) => {
                let positive = passages
                    .iter()
                    .find(|(id, _)| *id == gold)
                    .map(|(_, t)| t.clone())
                    .ok_or(SamplingError::UnknownFaq(gold))?;
                let pool = passages
                    .iter()
                    .filter(|(id, _)| *id != gold)
                    .map(|(_, t)| t)
                    .collect();
                (positive, pool)
            }
        };
        let negatives = rand::seq::index::sample(&mut rng, pool.len(), num_negatives)
            .into_iter()
            .map(|i| pool[i].clone())
            .collect();
        pairs.push(TrainingPair {
            query,
            positive,
            negatives,
        });
    }
    if found != planned.len() {
        let present: HashSet<UtteranceRef> = split.iter().map(UtteranceRef::of).collect();
        let missing = plan
            .kept_faq
            .iter()
            .chain(&plan.kept_silence)
            .find(|r| !present.contains(*r))
            .cloned()
            .expect("a planned utterance is missing");
        return Err(SamplingError::UnknownUtterance(missing));
    }
    Ok(pairs)
}

/// JSONL rendering, one pair per line.
pub fn training_pairs_jsonl(pairs: &[TrainingPair]) -> String {
    pairs
        .iter()
        .map(|p| serde_json::to_string(p).expect("pairs serialize") + "\n")
        .collect()
}
