//! Shared data model: conversations, episodic notes, and memory pages.
//!
//! A memory page is the stored retrieval unit: a verbatim slice of session
//! dialogue plus the structured note extracted from it and the session
//! timestamp. Note index ranges are INCLUSIVE on both ends ([start, end]);
//! every consumer in this crate follows that convention.

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("note range [{start}, {end}] out of bounds for session of {len} messages")]
    IndexOutOfRange { start: usize, end: usize, len: usize },
}

/// One utterance within a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    /// Zero-based position within the owning session.
    pub index: usize,
    pub speaker: String,
    pub text: String,
    /// Dataset-native turn identifier (e.g. LoCoMo dia_id), when available.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_id: Option<String>,
}

/// Session timestamp: the raw string is always retained; parsing is
/// best-effort because dataset timestamps are natural-language strings
/// like "1:56 pm on 8 May, 2023".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTimestamp {
    pub raw: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parsed: Option<NaiveDateTime>,
}

impl SessionTimestamp {
    pub fn parse(raw: &str) -> Self {
        let trimmed = raw.trim();
        let formats = [
            "%I:%M %p on %d %B, %Y",
            "%I:%M %p on %e %B, %Y",
            "%d %B, %Y %I:%M %p",
            "%Y-%m-%d %H:%M:%S",
            "%Y-%m-%d %H:%M",
        ];
        let parsed = formats
            .iter()
            .find_map(|f| NaiveDateTime::parse_from_str(trimmed, f).ok());
        SessionTimestamp {
            raw: raw.to_string(),
            parsed,
        }
    }
}

/// One conversation session: an ordered, contiguously indexed message list
/// with a timestamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversationSession {
    pub session_id: String,
    pub timestamp: SessionTimestamp,
    pub messages: Vec<Message>,
}

impl ConversationSession {
    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }
}

/// A fact tied to a person.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fact {
    pub person: String,
    pub statement: String,
}

/// An event with the temporal reference deduced from context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub description: String,
    pub temporal_ref: String,
}

/// The structured extraction from one topic-coherent dialogue segment.
/// `start`/`end` are message indices into the owning session, end inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryNote {
    pub start: usize,
    pub end: usize,
    pub summary: String,
    pub keywords: Vec<String>,
    pub persons: Vec<String>,
    pub facts: Vec<Fact>,
    pub events: Vec<Event>,
    pub tag: String,
}

/// The stored unit: raw dialogue slice + note + session timestamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryPage {
    pub page_id: u64,
    pub conversation_id: String,
    pub session_id: String,
    pub dialogue: Vec<Message>,
    pub note: MemoryNote,
    pub session_timestamp: SessionTimestamp,
}

/// Builds a page from a session and a validated note. The dialogue slice is a
/// verbatim copy of messages `[note.start, note.end]`; inputs are not mutated.
pub fn build_page(
    session: &ConversationSession,
    conversation_id: &str,
    note: &MemoryNote,
    page_id: u64,
) -> Result<MemoryPage, ModelError> {
    if note.start > note.end || note.end >= session.messages.len() {
        return Err(ModelError::IndexOutOfRange {
            start: note.start,
            end: note.end,
            len: session.messages.len(),
        });
    }
    Ok(MemoryPage {
        page_id,
        conversation_id: conversation_id.to_string(),
        session_id: session.session_id.clone(),
        dialogue: session.messages[note.start..=note.end].to_vec(),
        note: note.clone(),
        session_timestamp: session.timestamp.clone(),
    })
}

/// Canonical persisted form: one document per conversation holding its
/// sessions and constructed pages. Indexes are derived state and are rebuilt
/// on load, never persisted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversationStore {
    pub conversation_id: String,
    pub sessions: Vec<ConversationSession>,
    pub pages: Vec<MemoryPage>,
}
