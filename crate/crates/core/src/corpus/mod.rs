//! Annotated chat corpus: utterances, conversations, the FAQ database and
//! the operations that prepare them for ranking and evaluation.

mod io;
mod split;
mod whatsapp;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::class::{CandidateClass, FaqId};

pub use io::{
    read_aliases, read_annotations, read_corpus, read_faqs, write_corpus, AnnotationRecord,
};
pub use split::{split_dataset, split_sizes, SplitName, Splits};
pub use whatsapp::{parse_whatsapp_export, render_whatsapp_export, TIMESTAMP_FORMAT};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("conversation {0:?} has no utterances")]
    EmptyConversation(String),
    #[error("conversation {conversation:?}: expected utterance index {expected}, found {found}")]
    NonContiguousIndex {
        conversation: String,
        expected: usize,
        found: usize,
    },
    #[error("conversation {conversation:?}: utterance {index} is older than its predecessor")]
    TimestampRegression { conversation: String, index: usize },
    #[error("conversation {conversation:?}: utterance {index} has empty text")]
    EmptyText { conversation: String, index: usize },
    #[error("utterance {index} belongs to {found:?}, not conversation {expected:?}")]
    ConversationMismatch {
        expected: String,
        found: String,
        index: usize,
    },
    #[error("no alias for sender(s): {}", .0.join(", "))]
    UnmappedSenders(Vec<String>),
    #[error("conversation {conversation:?}: annotation index {index} out of range (length {len})")]
    AnnotationOutOfRange {
        conversation: String,
        index: usize,
        len: usize,
    },
    #[error("annotations reference unknown conversation {0:?}")]
    UnknownConversation(String),
    #[error("unknown FAQ id {0}")]
    UnknownFaq(FaqId),
    #[error("duplicate FAQ id {0}")]
    DuplicateFaq(FaqId),
    #[error("FAQ {id}: {field} must not be empty")]
    EmptyFaqField { id: FaqId, field: &'static str },
    #[error("invalid split ratios: {0}")]
    InvalidRatios(String),
    #[error("{available} conversation(s) cannot fill {needed} non-empty split(s)")]
    TooFewConversations { needed: usize, available: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {source}")]
    Json {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

/// One chat message with its gold annotation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub conversation_id: String,
    pub index: usize,
    pub timestamp: NaiveDateTime,
    pub sender: String,
    pub text: String,
    pub gold: CandidateClass,
}

/// A validated, ordered conversation. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conversation {
    id: String,
    utterances: Vec<Utterance>,
}

impl Conversation {
    /// Checks index contiguity, timestamp order, non-empty text and that every
    /// utterance belongs to `id`.
    pub fn new(id: impl Into<String>, utterances: Vec<Utterance>) -> Result<Self, CorpusError> {
        let id = id.into();
        if utterances.is_empty() {
            return Err(CorpusError::EmptyConversation(id));
        }
        for (expected, u) in utterances.iter().enumerate() {
            if u.conversation_id != id {
                return Err(CorpusError::ConversationMismatch {
                    expected: id,
                    found: u.conversation_id.clone(),
                    index: u.index,
                });
            }
            if u.index != expected {
                return Err(CorpusError::NonContiguousIndex {
                    conversation: id,
                    expected,
                    found: u.index,
                });
            }
            if u.text.trim().is_empty() {
                return Err(CorpusError::EmptyText {
                    conversation: id,
                    index: u.index,
                });
            }
        }
        if let Some(w) = utterances
            .windows(2)
            .find(|w| w[1].timestamp < w[0].timestamp)
        {
            return Err(CorpusError::TimestampRegression {
                conversation: id,
                index: w[1].index,
            });
        }
        Ok(Conversation { id, utterances })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn utterances(&self) -> &[Utterance] {
        &self.utterances
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    pub fn into_utterances(self) -> Vec<Utterance> {
        self.utterances
    }

    /// Distinct sender names in order of first appearance.
    pub fn senders(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        self.utterances
            .iter()
            .filter(|u| seen.insert(u.sender.as_str()))
            .map(|u| u.sender.as_str())
            .collect()
    }

    /// Fails on the first gold FAQ id missing from `faqs`.
    pub fn check_gold(&self, faqs: &FaqDatabase) -> Result<(), CorpusError> {
        for u in &self.utterances {
            if let CandidateClass::Faq(id) = u.gold {
                if !faqs.contains(id) {
                    return Err(CorpusError::UnknownFaq(id));
                }
            }
        }
        Ok(())
    }
}

/// A knowledge-base entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaqItem {
    pub id: FaqId,
    pub theme: String,
    pub question: String,
    pub answer: String,
}

/// The candidate set, sorted by ascending id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaqDatabase {
    items: Vec<FaqItem>,
    by_id: BTreeMap<FaqId, usize>,
}

impl FaqDatabase {
    pub fn new(mut items: Vec<FaqItem>) -> Result<Self, CorpusError> {
        items.sort_by_key(|f| f.id);
        let mut by_id = BTreeMap::new();
        for (pos, item) in items.iter().enumerate() {
            if item.question.trim().is_empty() {
                return Err(CorpusError::EmptyFaqField {
                    id: item.id,
                    field: "question",
                });
            }
            if item.answer.trim().is_empty() {
                return Err(CorpusError::EmptyFaqField {
                    id: item.id,
                    field: "answer",
                });
            }
            if by_id.insert(item.id, pos).is_some() {
                return Err(CorpusError::DuplicateFaq(item.id));
            }
        }
        Ok(FaqDatabase { items, by_id })
    }

    pub fn get(&self, id: FaqId) -> Option<&FaqItem> {
        self.by_id.get(&id).map(|&pos| &self.items[pos])
    }

    pub fn contains(&self, id: FaqId) -> bool {
        self.by_id.contains_key(&id)
    }

    pub fn items(&self) -> &[FaqItem] {
        &self.items
    }

    pub fn ids(&self) -> impl Iterator<Item = FaqId> + '_ {
        self.items.iter().map(|f| f.id)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Every FAQ id plus `no-suggestion`.
    pub fn all_classes(&self) -> Vec<CandidateClass> {
        std::iter::once(CandidateClass::NoSuggestion)
            .chain(self.ids().map(CandidateClass::Faq))
            .collect()
    }
}

/// Replaces every sender with its alias. Text bodies are left untouched.
pub fn pseudonymize(
    conv: &Conversation,
    mapping: &HashMap<String, String>,
) -> Result<Conversation, CorpusError> {
    let missing: Vec<String> = conv
        .senders()
        .into_iter()
        .filter(|s| !mapping.contains_key(*s))
        .map(str::to_string)
        .collect();
    if !missing.is_empty() {
        return Err(CorpusError::UnmappedSenders(missing));
    }
    let utterances = conv
        .utterances
        .iter()
        .map(|u| Utterance {
            sender: mapping[&u.sender].clone(),
            ..u.clone()
        })
        .collect();
    Ok(Conversation {
        id: conv.id.clone(),
        utterances,
    })
}

/// Sets gold labels from `(utterance index, FAQ id)` pairs; every other
/// utterance becomes `no-suggestion`.
pub fn attach_annotations(
    conv: &Conversation,
    annotations: &[(usize, FaqId)],
    faqs: &FaqDatabase,
) -> Result<Conversation, CorpusError> {
    let mut utterances: Vec<Utterance> = conv
        .utterances
        .iter()
        .map(|u| Utterance {
            gold: CandidateClass::NoSuggestion,
            ..u.clone()
        })
        .collect();
    for &(index, faq) in annotations {
        if !faqs.contains(faq) {
            return Err(CorpusError::UnknownFaq(faq));
        }
        let len = utterances.len();
        let u = utterances
            .get_mut(index)
            .ok_or_else(|| CorpusError::AnnotationOutOfRange {
                conversation: conv.id.clone(),
                index,
                len,
            })?;
        u.gold = CandidateClass::Faq(faq);
    }
    Ok(Conversation {
        id: conv.id.clone(),
        utterances,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub num_conversations: usize,
    pub num_utterances: usize,
    pub annotated_fraction: f64,
    pub per_faq_counts: BTreeMap<FaqId, usize>,
    pub min_conversation_length: usize,
    pub max_conversation_length: usize,
    pub mean_conversation_length: f64,
}

pub fn corpus_stats(convs: &[Conversation]) -> CorpusStats {
    let num_utterances: usize = convs.iter().map(Conversation::len).sum();
    let mut per_faq_counts = BTreeMap::new();
    for id in convs
        .iter()
        .flat_map(|c| c.utterances())
        .filter_map(|u| u.gold.faq_id())
    {
        *per_faq_counts.entry(id).or_insert(0) += 1;
    }
    let annotated: usize = per_faq_counts.values().sum();
    let lengths = convs.iter().map(Conversation::len);
    CorpusStats {
        num_conversations: convs.len(),
        num_utterances,
        annotated_fraction: if num_utterances == 0 {
            0.0
        } else {
            annotated as f64 / num_utterances as f64
        },
        per_faq_counts,
        min_conversation_length: lengths.clone().min().unwrap_or(0),
        max_conversation_length: lengths.max().unwrap_or(0),
        mean_conversation_length: if convs.is_empty() {
            0.0
        } else {
            num_utterances as f64 / convs.len() as f64
        },
    }
}
