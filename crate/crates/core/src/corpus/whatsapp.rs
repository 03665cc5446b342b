//! Chat export ingestion.
//!
//! Line grammar (German-locale export):
//!
//! ```text
//! DD.MM.YY, HH:MM - Sender: text
//! ```
//!
//! A line that does not start with such a header continues the previous
//! message and is appended to its text after a newline. Header lines without
//! a `Sender: ` part are system notices and are dropped together with their
//! continuation lines. Media placeholders such as `<Medien ausgeschlossen>`
//! are ordinary message text.

use std::sync::OnceLock;

use chrono::NaiveDateTime;
use regex::Regex;

use super::{Conversation, CorpusError, Utterance};
use crate::class::CandidateClass;

/// chrono format of the header timestamp.
pub const TIMESTAMP_FORMAT: &str = "%d.%m.%y, %H:%M";

fn header() -> &'static Regex {
    static HEADER: OnceLock<Regex> = OnceLock::new();
    HEADER.get_or_init(|| {
        Regex::new(r"^(\d{2}\.\d{2}\.\d{2}, \d{2}:\d{2}) - (.*)$").expect("valid header regex")
    })
}

struct Pending {
    line: usize,
    timestamp: NaiveDateTime,
    sender: Option<String>,
    text: String,
}

/// Parses a raw export into a conversation whose gold labels are all
/// `no-suggestion`.
pub fn parse_whatsapp_export(
    raw_text: &str,
    conversation_id: &str,
) -> Result<Conversation, CorpusError> {
    let raw_text = raw_text.strip_prefix('\u{feff}').unwrap_or(raw_text);
    let mut messages: Vec<Pending> = Vec::new();

    for (n, line) in raw_text.lines().enumerate() {
        let line_no = n + 1;
        if let Some(caps) = header().captures(line) {
            let stamp = &caps[1];
            let timestamp =
                NaiveDateTime::parse_from_str(stamp, TIMESTAMP_FORMAT).map_err(|e| {
                    CorpusError::Parse {
                        line: line_no,
                        message: format!("invalid timestamp {stamp:?}: {e}"),
                    }
                })?;
            let rest = &caps[2];
            let (sender, text) = match rest.split_once(": ") {
                Some((sender, text)) if !sender.is_empty() => {
                    (Some(sender.to_string()), text.to_string())
                }
                _ => (None, String::new()),
            };
            messages.push(Pending {
                line: line_no,
                timestamp,
                sender,
                text,
            });
        } else if let Some(last) = messages.last_mut() {
            last.text.push('\n');
            last.text.push_str(line);
        } else {
            return Err(CorpusError::Parse {
                line: line_no,
                message: "expected a message header \"DD.MM.YY, HH:MM - Sender: text\"".into(),
            });
        }
    }

    let mut utterances = Vec::with_capacity(messages.len());
    let mut previous: Option<NaiveDateTime> = None;
    for m in messages {
        let Some(sender) = m.sender else { continue };
        if m.text.trim().is_empty() {
            return Err(CorpusError::Parse {
                line: m.line,
                message: "message text is empty".into(),
            });
        }
        if previous.is_some_and(|p| m.timestamp < p) {
            return Err(CorpusError::Parse {
                line: m.line,
                message: "timestamp earlier than the previous message".into(),
            });
        }
        previous = Some(m.timestamp);
        utterances.push(Utterance {
            conversation_id: conversation_id.to_string(),
            index: utterances.len(),
            timestamp: m.timestamp,
            sender,
            text: m.text,
            gold: CandidateClass::NoSuggestion,
        });
    }
    if utterances.is_empty() {
        return Err(CorpusError::Parse {
            line: 1,
            message: "export contains no messages".into(),
        });
    }
    Conversation::new(conversation_id, utterances)
}

/// Renders a conversation back into the export line format.
pub fn render_whatsapp_export(conv: &Conversation) -> String {
    let mut out = String::new();
    for u in conv.utterances() {
        out.push_str(&u.timestamp.format(TIMESTAMP_FORMAT).to_string());
        out.push_str(" - ");
        out.push_str(&u.sender);
        out.push_str(": ");
        out.push_str(&u.text);
        out.push('\n');
    }
    out
}
