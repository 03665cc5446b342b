//! Candidate classes: an FAQ id or the reserved `no-suggestion` class.

use std::fmt;
use std::num::NonZeroU32;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Literal used for the silence class in every text format.
pub const NO_SUGGESTION: &str = "no-suggestion";

/// Positive integer identifier of an FAQ item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FaqId(NonZeroU32);

impl FaqId {
    /// Returns `None` for zero.
    pub fn new(id: u32) -> Option<Self> {
        NonZeroU32::new(id).map(FaqId)
    }

    pub fn get(self) -> u32 {
        self.0.get()
    }
}

impl fmt::Display for FaqId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for FaqId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let n: u32 = s
            .trim()
            .parse()
            .map_err(|_| format!("invalid FAQ id {s:?}"))?;
        FaqId::new(n).ok_or_else(|| "FAQ id must be positive".to_string())
    }
}

/// A rankable class. Also used as the gold label of an utterance.
///
/// `NoSuggestion` orders before every FAQ id, which is the tie-break order
/// used by the rankers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CandidateClass {
    NoSuggestion,
    Faq(FaqId),
}

impl CandidateClass {
    pub fn faq_id(self) -> Option<FaqId> {
        match self {
            CandidateClass::NoSuggestion => None,
            CandidateClass::Faq(id) => Some(id),
        }
    }

    pub fn is_silence(self) -> bool {
        matches!(self, CandidateClass::NoSuggestion)
    }
}

impl From<FaqId> for CandidateClass {
    fn from(id: FaqId) -> Self {
        CandidateClass::Faq(id)
    }
}

impl fmt::Display for CandidateClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CandidateClass::NoSuggestion => f.write_str(NO_SUGGESTION),
            CandidateClass::Faq(id) => write!(f, "{id}"),
        }
    }
}

impl FromStr for CandidateClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim() == NO_SUGGESTION {
            Ok(CandidateClass::NoSuggestion)
        } else {
            s.parse().map(CandidateClass::Faq)
        }
    }
}

// Wire form: an integer FAQ id or the string "no-suggestion".
impl Serialize for CandidateClass {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            CandidateClass::NoSuggestion => serializer.serialize_str(NO_SUGGESTION),
            CandidateClass::Faq(id) => serializer.serialize_u32(id.get()),
        }
    }
}

impl<'de> Deserialize<'de> for CandidateClass {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Id(u32),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Id(n) => FaqId::new(n)
                .map(CandidateClass::Faq)
                .ok_or_else(|| serde::de::Error::custom("FAQ id must be positive")),
            Raw::Text(s) if s == NO_SUGGESTION => Ok(CandidateClass::NoSuggestion),
            Raw::Text(s) => Err(serde::de::Error::custom(format!(
                "expected an FAQ id or {NO_SUGGESTION:?}, got {s:?}"
            ))),
        }
    }
}
