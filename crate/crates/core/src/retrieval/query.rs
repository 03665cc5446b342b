use serde::{Deserialize, Serialize};

use super::RetrievalError;
use crate::class::FaqId;
use crate::corpus::{FaqItem, Utterance};

/// Number of consecutive utterances concatenated into a query.
pub const DEFAULT_WINDOW: usize = 4;

/// A query window: up to N sender-prefixed utterances ending at the current
/// turn, oldest first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub text: String,
    pub window: Vec<(String, String)>,
}

impl Query {
    /// Renders each entry as `"<sender>: <text>"`, joined by single spaces.
    pub fn from_window(window: Vec<(String, String)>) -> Self {
        let text = window
            .iter()
            .map(|(sender, text)| format!("{sender}: {text}"))
            .collect::<Vec<_>>()
            .join(" ");
        Query { text, window }
    }
}

pub fn build_query(history: &[Utterance], position: usize) -> Result<Query, RetrievalError> {
    build_query_with_window(history, position, DEFAULT_WINDOW)
}

/// Window of at most `window` utterances ending at `position`.
///
/// The window shrinks at the start of a conversation and never reaches back
/// into a different conversation when `history` spans several.
pub fn build_query_with_window(
    history: &[Utterance],
    position: usize,
    window: usize,
) -> Result<Query, RetrievalError> {
    let current = history
        .get(position)
        .ok_or(RetrievalError::PositionOutOfRange {
            position,
            len: history.len(),
        })?;
    let mut start = position;
    while start > 0
        && position - start + 1 < window.max(1)
        && history[start - 1].conversation_id == current.conversation_id
    {
        start -= 1;
    }
    Ok(Query::from_window(
        history[start..=position]
            .iter()
            .map(|u| (u.sender.clone(), u.text.clone()))
            .collect(),
    ))
}

/// The ranked document for one FAQ: question and answer, without the theme.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub faq_id: FaqId,
    pub text: String,
}

pub fn build_passage(faq: &FaqItem) -> Passage {
    Passage {
        faq_id: faq.id,
        text: format!("{} {}", faq.question, faq.answer),
    }
}
