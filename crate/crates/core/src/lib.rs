//! Conversational FAQ suggestion engine.
//!
//! The engine listens to a chat between a customer and a human support agent
//! and ranks FAQ answers, or explicit silence, for the agent after every
//! message. The crate is organised along the pipeline:
//!
//! - [`corpus`]: chat export ingestion, annotations, pseudonymisation, splits
//!   and statistics.
//! - [`retrieval`]: query windows, passages and the four rankers (dumb,
//!   random, BM25, dense).
//! - [`sampling`]: `no-suggestion` rebalancing for train/dev and training
//!   pair export for external encoder fine-tuning.
//! - [`evaluation`]: dual-class MRR@10 and report rendering.
//! - [`session`]: the event-sourced agent session behind the web console.

pub mod class;
pub mod corpus;
pub mod evaluation;
pub mod project;
pub mod retrieval;
pub mod sampling;
pub mod session;

pub use class::{CandidateClass, FaqId};
pub use corpus::{Conversation, FaqDatabase, FaqItem, Utterance};
pub use retrieval::{Query, RankedSuggestion, Ranker};
