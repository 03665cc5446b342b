//! Event-sourced agent session.
//!
//! A session is a fold over its append-only event log. Commands validate
//! against the current state, append one [`LogRecord`] and apply it; replaying
//! the log from scratch yields the same state.
//!
//! Slot rules: after every ranked utterance the two visible slots show the
//! two best FAQ suggestions. Discarding a slot pulls the next suggestion from
//! the reserve, which holds at most four more (the first six ranks). Once the
//! reserve is exhausted a discard empties the slot. When the ranking is headed
//! by `no-suggestion` nothing is shown.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::class::{CandidateClass, FaqId};
use crate::corpus::{FaqDatabase, FaqItem};
use crate::evaluation::utterance_seed;
use crate::project::{match_projects, Project};
use crate::retrieval::{Query, RankedSuggestion, Ranker, RetrievalError, DEFAULT_WINDOW};

/// Number of visible suggestion slots.
pub const VISIBLE_SLOTS: usize = 2;
/// Visible plus reserve suggestions reachable by discarding.
pub const MAX_SHOWN: usize = 6;

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("slot {0} does not exist (slots are 1 and 2)")]
    InvalidSlot(usize),
    #[error("slot {0} is empty")]
    EmptySlot(usize),
    #[error("unknown FAQ id {0}")]
    UnknownFaq(FaqId),
    #[error("message text is empty")]
    EmptyText,
    #[error("log record {seq} does not follow {expected} for session {session:?}")]
    OutOfOrder {
        session: String,
        seq: u64,
        expected: u64,
    },
    #[error(transparent)]
    Ranking(#[from] RetrievalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Customer,
    Agent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub sender: String,
    pub text: String,
    pub role: Role,
    pub at: DateTime<Utc>,
}

/// Agent-controlled toggles. `learning_behavior` is stored but has no effect:
/// models are never updated from session activity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSettings {
    pub ai_support: bool,
    pub learning_behavior: bool,
}

impl Default for SessionSettings {
    fn default() -> Self {
        SessionSettings {
            ai_support: true,
            learning_behavior: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SessionEvent {
    /// `ranking` is `None` when AI support was off.
    Utterance {
        sender: String,
        text: String,
        role: Role,
        ranking: Option<Vec<RankedSuggestion>>,
    },
    Discard {
        slot: usize,
        class: CandidateClass,
    },
    CopyToChat {
        slot: usize,
        class: CandidateClass,
    },
    GetMoreInfo {
        slot: usize,
        class: CandidateClass,
    },
    Feedback {
        search_terms: String,
        faq_id: FaqId,
        window: Vec<(String, String)>,
    },
    Settings {
        settings: SessionSettings,
    },
}

/// One line of the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub session_id: String,
    pub seq: u64,
    pub at: DateTime<Utc>,
    #[serde(flatten)]
    pub event: SessionEvent,
}

/// Feedback as captured, kept for offline analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackRecord {
    pub search_terms: String,
    pub faq_id: FaqId,
    pub window: Vec<(String, String)>,
}

/// State derived from the log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionState {
    pub id: String,
    pub messages: Vec<ChatMessage>,
    pub ranking: Vec<RankedSuggestion>,
    /// FAQ suggestions reachable from the slots: FAQ entries among the first
    /// six ranks, in rank order.
    pub queue: Vec<RankedSuggestion>,
    pub slots: [Option<RankedSuggestion>; VISIBLE_SLOTS],
    /// Next queue entry handed out by a discard.
    pub cursor: usize,
    pub counter: i64,
    pub settings: SessionSettings,
    pub copies: u64,
    pub discards: u64,
    pub feedback: Vec<FeedbackRecord>,
    pub next_seq: u64,
}

impl SessionState {
    fn new(id: String) -> Self {
        SessionState {
            id,
            messages: Vec::new(),
            ranking: Vec::new(),
            queue: Vec::new(),
            slots: [None; VISIBLE_SLOTS],
            cursor: VISIBLE_SLOTS,
            counter: 0,
            settings: SessionSettings::default(),
            copies: 0,
            discards: 0,
            feedback: Vec::new(),
            next_seq: 0,
        }
    }

    fn reset_ranking(&mut self, ranking: Vec<RankedSuggestion>) {
        let silent = ranking.first().is_none_or(|s| s.class.is_silence());
        self.queue = if silent {
            Vec::new()
        } else {
            ranking
                .iter()
                .take(MAX_SHOWN)
                .filter(|s| !s.class.is_silence())
                .copied()
                .collect()
        };
        self.ranking = ranking;
        for (i, slot) in self.slots.iter_mut().enumerate() {
            *slot = self.queue.get(i).copied();
        }
        self.cursor = VISIBLE_SLOTS;
    }

    fn apply(&mut self, record: &LogRecord) {
        match &record.event {
            SessionEvent::Utterance {
                sender,
                text,
                role,
                ranking,
            } => {
                self.messages.push(ChatMessage {
                    sender: sender.clone(),
                    text: text.clone(),
                    role: *role,
                    at: record.at,
                });
                if let Some(ranking) = ranking {
                    self.reset_ranking(ranking.clone());
                }
            }
            SessionEvent::Discard { slot, .. } => {
                let next = self.queue.get(self.cursor).copied();
                if next.is_some() {
                    self.cursor += 1;
                }
                self.slots[slot - 1] = next;
                self.counter -= 1;
                self.discards += 1;
            }
            SessionEvent::CopyToChat { .. } => {
                self.counter += 1;
                self.copies += 1;
            }
            SessionEvent::GetMoreInfo { .. } => {}
            SessionEvent::Feedback {
                search_terms,
                faq_id,
                window,
            } => self.feedback.push(FeedbackRecord {
                search_terms: search_terms.clone(),
                faq_id: *faq_id,
                window: window.clone(),
            }),
            SessionEvent::Settings { settings } => {
                self.settings = *settings;
                if !settings.ai_support {
                    self.reset_ranking(Vec::new());
                }
            }
        }
        self.next_seq = record.seq + 1;
    }

    /// Current query window over the last messages.
    pub fn window(&self) -> Query {
        let start = self.messages.len().saturating_sub(DEFAULT_WINDOW);
        Query::from_window(
            self.messages[start..]
                .iter()
                .map(|m| (m.sender.clone(), m.text.clone()))
                .collect(),
        )
    }

    pub fn slot(&self, slot: usize) -> Result<RankedSuggestion, SessionError> {
        if !(1..=VISIBLE_SLOTS).contains(&slot) {
            return Err(SessionError::InvalidSlot(slot));
        }
        self.slots[slot - 1].ok_or(SessionError::EmptySlot(slot))
    }

    /// Projects matched against everything the customer has written.
    pub fn match_projects<'p>(&self, projects: &'p [Project]) -> Vec<&'p Project> {
        match_projects(
            self.messages
                .iter()
                .filter(|m| m.role == Role::Customer)
                .map(|m| m.text.as_str()),
            projects,
        )
    }
}

/// A session together with its log.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    state: SessionState,
    log: Vec<LogRecord>,
}

impl Session {
    pub fn new(id: impl Into<String>) -> Self {
        Session {
            state: SessionState::new(id.into()),
            log: Vec::new(),
        }
    }

    /// Rebuilds a session from its records, which must be numbered 0, 1, ...
    pub fn replay(
        id: impl Into<String>,
        records: impl IntoIterator<Item = LogRecord>,
    ) -> Result<Self, SessionError> {
        let mut session = Session::new(id);
        for record in records {
            let expected = session.state.next_seq;
            if record.seq != expected || record.session_id != session.state.id {
                return Err(SessionError::OutOfOrder {
                    session: record.session_id,
                    seq: record.seq,
                    expected,
                });
            }
            session.state.apply(&record);
            session.log.push(record);
        }
        Ok(session)
    }

    pub fn id(&self) -> &str {
        &self.state.id
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn log(&self) -> &[LogRecord] {
        &self.log
    }

    fn record(&mut self, event: SessionEvent, at: DateTime<Utc>) -> &LogRecord {
        let record = LogRecord {
            session_id: self.state.id.clone(),
            seq: self.state.next_seq,
            at,
            event,
        };
        self.state.apply(&record);
        self.log.push(record);
        self.log.last().expect("just pushed")
    }

    /// Appends a message and, with AI support on, re-ranks from the new
    /// window. This is the only command that changes the ranking.
    pub fn post_utterance<R: Ranker + ?Sized>(
        &mut self,
        sender: &str,
        text: &str,
        role: Role,
        ranker: &R,
        at: DateTime<Utc>,
    ) -> Result<&LogRecord, SessionError> {
        if text.trim().is_empty() {
            return Err(SessionError::EmptyText);
        }
        let ranking = if self.state.settings.ai_support {
            let mut window: Vec<(String, String)> = self
                .state
                .messages
                .iter()
                .rev()
                .take(DEFAULT_WINDOW - 1)
                .rev()
                .map(|m| (m.sender.clone(), m.text.clone()))
                .collect();
            window.push((sender.to_string(), text.to_string()));
            let seed = utterance_seed(0, &self.state.id, self.state.messages.len());
            Some(ranker.rank(&Query::from_window(window), seed)?)
        } else {
            None
        };
        let event = SessionEvent::Utterance {
            sender: sender.to_string(),
            text: text.to_string(),
            role,
            ranking,
        };
        Ok(self.record(event, at))
    }

    pub fn discard(&mut self, slot: usize, at: DateTime<Utc>) -> Result<&LogRecord, SessionError> {
        let class = self.state.slot(slot)?.class;
        Ok(self.record(SessionEvent::Discard { slot, class }, at))
    }

    /// Returns the answer text for the chat input field.
    pub fn copy_to_chat(
        &mut self,
        slot: usize,
        faqs: &FaqDatabase,
        at: DateTime<Utc>,
    ) -> Result<String, SessionError> {
        let (class, item) = self.lookup(slot, faqs)?;
        let answer = item.answer.clone();
        self.record(SessionEvent::CopyToChat { slot, class }, at);
        Ok(answer)
    }

    pub fn get_more_info(
        &mut self,
        slot: usize,
        faqs: &FaqDatabase,
        at: DateTime<Utc>,
    ) -> Result<FaqItem, SessionError> {
        let (class, item) = self.lookup(slot, faqs)?;
        let item = item.clone();
        self.record(SessionEvent::GetMoreInfo { slot, class }, at);
        Ok(item)
    }

    /// Records the agent's own pick. Nothing is learned from it.
    pub fn submit_feedback(
        &mut self,
        search_terms: &str,
        faq_id: FaqId,
        faqs: &FaqDatabase,
        at: DateTime<Utc>,
    ) -> Result<&LogRecord, SessionError> {
        if !faqs.contains(faq_id) {
            return Err(SessionError::UnknownFaq(faq_id));
        }
        let window = self.state.window().window;
        let event = SessionEvent::Feedback {
            search_terms: search_terms.to_string(),
            faq_id,
            window,
        };
        Ok(self.record(event, at))
    }

    pub fn update_settings(&mut self, settings: SessionSettings, at: DateTime<Utc>) -> &LogRecord {
        self.record(SessionEvent::Settings { settings }, at)
    }

    fn lookup<'f>(
        &self,
        slot: usize,
        faqs: &'f FaqDatabase,
    ) -> Result<(CandidateClass, &'f FaqItem), SessionError> {
        let class = self.state.slot(slot)?.class;
        let id = class.faq_id().ok_or(SessionError::EmptySlot(slot))?;
        let item = faqs.get(id).ok_or(SessionError::UnknownFaq(id))?;
        Ok((class, item))
    }
}

/// Replays an interleaved multi-session log, grouping records by session.
pub fn replay_log(
    records: impl IntoIterator<Item = LogRecord>,
) -> Result<BTreeMap<String, Session>, SessionError> {
    let mut grouped: BTreeMap<String, Vec<LogRecord>> = BTreeMap::new();
    for r in records {
        grouped.entry(r.session_id.clone()).or_default().push(r);
    }
    grouped
        .into_iter()
        .map(|(id, records)| Session::replay(id.clone(), records).map(|s| (id, s)))
        .collect()
}
