//! Episodic memory construction.
//!
//! The primary path is one-shot multi-task LLM extraction: a single
//! completion call segments a session at topic shifts and emits structured
//! note records, which are then validated and repaired mechanically. A
//! deterministic fallback extractor enables offline end-to-end tests, and
//! two baseline chunkers (fixed-length and semantic) back the chunking
//! ablation.

use serde::Deserialize;
use thiserror::Error;

use crate::embed::{cosine_similarity, EmbedError, Embedder};
use crate::gateway::{ChatBackend, ChatTurn, GatewayError};
use crate::model::{ConversationSession, Event, Fact, MemoryNote};

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("malformed extraction after {attempts} attempts: {message}")]
    MalformedExtraction { attempts: u32, message: String },
    #[error("coverage repair failed: {0}")]
    CoverageRepairFailed(String),
    #[error("session has no messages")]
    EmptySession,
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

pub const DEFAULT_EXTRACTION_PROMPT: &str = include_str!("../prompts/extraction.txt");

#[derive(Debug, Clone)]
pub struct ExtractionConfig {
    /// Extraction prompt with its one-shot example.
    pub prompt_template: String,
    pub overlap_msgs: usize,
    pub max_repair_attempts: u32,
    pub fallback_window: usize,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            prompt_template: DEFAULT_EXTRACTION_PROMPT.to_string(),
            overlap_msgs: 1,
            max_repair_attempts: 1,
            fallback_window: 10,
        }
    }
}

/// Notes plus the repair bookkeeping from one extraction.
#[derive(Debug, Clone)]
pub struct ExtractionOutcome {
    pub notes: Vec<MemoryNote>,
    pub repairs: Vec<String>,
    /// Total completion calls issued (1 + retries).
    pub completion_calls: u32,
}

#[derive(Debug, Deserialize)]
struct RawNote {
    start_idx: i64,
    end_idx: i64,
    #[serde(default)]
    summary: String,
    #[serde(default)]
    keywords: Vec<String>,
    #[serde(default)]
    persons: Vec<String>,
    #[serde(default)]
    facts: Vec<RawFact>,
    #[serde(default)]
    events: Vec<RawEvent>,
    #[serde(default)]
    tag: String,
}

#[derive(Debug, Deserialize)]
struct RawFact {
    person: String,
    statement: String,
}

#[derive(Debug, Deserialize)]
struct RawEvent {
    description: String,
    #[serde(default)]
    temporal_ref: String,
}

pub fn render_session(session: &ConversationSession) -> String {
    let mut out = format!("Session timestamp: {}\n", session.timestamp.raw);
    for m in &session.messages {
        out.push_str(&format!("[{}] {}: {}\n", m.index, m.speaker, m.text));
    }
    out
}

/// One-shot LLM extraction with mechanical validation and repair. Issues
/// exactly one primary completion call, plus at most `max_repair_attempts`
/// re-prompts when the output is malformed.
pub fn extract_notes(
    session: &ConversationSession,
    llm: &dyn ChatBackend,
    cfg: &ExtractionConfig,
) -> Result<ExtractionOutcome, ExtractError> {
    if session.is_empty() {
        return Err(ExtractError::EmptySession);
    }
    let rendered = render_session(session);
    let mut messages = vec![
        ChatTurn::system(cfg.prompt_template.clone()),
        ChatTurn::user(rendered),
    ];
    let mut calls = 0u32;
    let mut last_error = String::new();
    while calls <= cfg.max_repair_attempts {
        let (turn, _usage) = llm.complete(&messages, &[])?;
        calls += 1;
        match validate_notes(&turn.content, session.len()) {
            Ok((notes, mut repairs)) => {
                if calls > 1 {
                    repairs.push(format!("re-prompted after: {last_error}"));
                }
                return Ok(ExtractionOutcome { notes, repairs, completion_calls: calls });
            }
            Err(msg) => {
                log::warn!("extraction attempt {calls} malformed: {msg}");
                last_error = msg.clone();
                messages.push(turn);
                messages.push(ChatTurn::user(format!(
                    "Your previous output was invalid: {msg}. Reply again with ONLY the corrected JSON array of note records."
                )));
            }
        }
    }
    Err(ExtractError::MalformedExtraction {
        attempts: calls,
        message: last_error,
    })
}

/// Parses and repairs one raw completion into validated, coverage-complete
/// notes. Returns a human-readable error when the output is unusable and a
/// re-prompt is warranted.
fn validate_notes(content: &str, session_len: usize) -> Result<(Vec<MemoryNote>, Vec<String>), String> {
    let body = strip_code_fence(content);
    let raw: Vec<RawNote> =
        serde_json::from_str(body.trim()).map_err(|e| format!("not a JSON note array: {e}"))?;
    if raw.is_empty() {
        return Err("empty note array".to_string());
    }

    let mut repairs = Vec::new();
    let max_idx = (session_len - 1) as i64;
    let mut notes: Vec<MemoryNote> = Vec::new();
    for (i, r) in raw.into_iter().enumerate() {
        let start = r.start_idx.clamp(0, max_idx);
        let end = r.end_idx.clamp(0, max_idx);
        if start != r.start_idx || end != r.end_idx {
            repairs.push(format!(
                "note {i}: clamped range ({}, {}) -> ({start}, {end})",
                r.start_idx, r.end_idx
            ));
        }
        if start > end {
            repairs.push(format!("note {i}: dropped, start {start} > end {end} after clamping"));
            continue;
        }
        let mut persons = r.persons;
        let facts: Vec<Fact> = r
            .facts
            .into_iter()
            .map(|f| Fact { person: f.person, statement: f.statement })
            .collect();
        for fact in &facts {
            let known = persons
                .iter()
                .any(|p| crate::store::normalize_key(p) == crate::store::normalize_key(&fact.person));
            if !known {
                repairs.push(format!("note {i}: added fact person {:?} to persons", fact.person));
                persons.push(fact.person.clone());
            }
        }
        let summary = if r.summary.trim().is_empty() {
            repairs.push(format!("note {i}: substituted empty summary"));
            format!("messages {start} to {end}")
        } else {
            r.summary
        };
        let tag = if r.tag.trim().is_empty() {
            repairs.push(format!("note {i}: substituted empty tag"));
            "general".to_string()
        } else {
            r.tag
        };
        notes.push(MemoryNote {
            start: start as usize,
            end: end as usize,
            summary,
            keywords: r.keywords,
            persons,
            facts,
            events: r
                .events
                .into_iter()
                .map(|e| Event { description: e.description, temporal_ref: e.temporal_ref })
                .collect(),
            tag,
        });
    }
    if notes.is_empty() {
        return Err("no valid note ranges after clamping".to_string());
    }

    notes.sort_by_key(|n| (n.start, n.end));

    // Merge notes that overlap each other beyond plain adjacency.
    let mut merged: Vec<MemoryNote> = Vec::new();
    for note in notes {
        match merged.last_mut() {
            Some(prev) if note.start <= prev.end => {
                repairs.push(format!(
                    "merged overlapping notes ({}, {}) and ({}, {})",
                    prev.start, prev.end, note.start, note.end
                ));
                prev.end = prev.end.max(note.end);
                prev.summary = format!("{} {}", prev.summary, note.summary);
                prev.keywords.extend(note.keywords);
                for p in note.persons {
                    if !prev.persons.iter().any(|q| {
                        crate::store::normalize_key(q) == crate::store::normalize_key(&p)
                    }) {
                        prev.persons.push(p);
                    }
                }
                prev.facts.extend(note.facts);
                prev.events.extend(note.events);
            }
            _ => merged.push(note),
        }
    }

    // Close coverage gaps: first note is pulled to 0, interior gaps are
    // filled by extending the preceding note, the last note reaches the end.
    if merged[0].start != 0 {
        repairs.push(format!("pulled first note start {} -> 0", merged[0].start));
        merged[0].start = 0;
    }
    for i in 1..merged.len() {
        let prev_end = merged[i - 1].end;
        if merged[i].start > prev_end + 1 {
            repairs.push(format!(
                "extended note end {} -> {} to close gap",
                prev_end,
                merged[i].start - 1
            ));
            merged[i - 1].end = merged[i].start - 1;
        }
    }
    let last = merged.len() - 1;
    if merged[last].end < session_len - 1 {
        repairs.push(format!(
            "extended final note end {} -> {}",
            merged[last].end,
            session_len - 1
        ));
        merged[last].end = session_len - 1;
    }

    let mut covered = merged[0].start;
    for n in &merged {
        if n.start > covered {
            return Err(format!("coverage gap before index {}", n.start));
        }
        covered = covered.max(n.end + 1);
    }
    Ok((merged, repairs))
}

fn strip_code_fence(content: &str) -> &str {
    let trimmed = content.trim();
    if let Some(rest) = trimmed.strip_prefix("```") {
        let rest = rest.strip_prefix("json").unwrap_or(rest);
        if let Some(end) = rest.rfind("```") {
            return &rest[..end];
        }
    }
    trimmed
}

/// Pulls every note start except the first back by `overlap_msgs` so adjacent
/// pages share boundary messages; ends are unchanged.
pub fn smooth_overlap(
    notes: &[MemoryNote],
    overlap_msgs: usize,
    _session_len: usize,
) -> Vec<MemoryNote> {
    notes
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let mut note = n.clone();
            if i > 0 && overlap_msgs > 0 {
                note.start = note.start.saturating_sub(overlap_msgs);
            }
            note
        })
        .collect()
}

const STOPWORDS: &[&str] = &[
    "about", "after", "again", "also", "back", "because", "been", "before", "being", "between",
    "both", "cant", "could", "did", "does", "doing", "down", "each", "even", "from", "getting",
    "going", "gonna", "good", "great", "have", "having", "hear", "hello", "here", "hows", "into",
    "just", "know", "like", "look", "love", "made", "make", "many", "maybe", "more", "most",
    "much", "need", "never", "over", "people", "really", "right", "said", "same", "says", "should",
    "some", "something", "sounds", "still", "such", "sure", "than", "thank", "thanks", "that",
    "thats", "their", "them", "then", "there", "these", "they", "thing", "things", "think",
    "this", "those", "through", "time", "today", "told", "took", "very", "want", "well", "went",
    "were", "what", "when", "where", "which", "while", "will", "with", "would", "yeah", "your",
    "youre",
];

const MONTHS: &[&str] = &[
    "january", "february", "march", "april", "may", "june", "july", "august", "september",
    "october", "november", "december",
];

const WEEKDAYS: &[&str] = &[
    "monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday",
];

fn alpha_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphabetic())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

fn contains_standalone_i(text: &str) -> bool {
    text.split(|c: char| !c.is_alphanumeric() && c != '\'')
        .any(|t| t == "I" || t.starts_with("I'"))
}

fn contains_temporal_trigger(text: &str) -> bool {
    alpha_tokens(text)
        .iter()
        .any(|t| MONTHS.contains(&t.as_str()) || WEEKDAYS.contains(&t.as_str()))
}

/// Synthesizes a note for one message window with fixed, deterministic rules.
/// Shared by the fallback extractor and the baseline-chunker pipelines.
pub fn synthesize_note(session: &ConversationSession, start: usize, end: usize) -> MemoryNote {
    let window = &session.messages[start..=end];

    let mut persons: Vec<String> = Vec::new();
    for m in window {
        if !persons.iter().any(|p| p == &m.speaker) {
            persons.push(m.speaker.clone());
        }
    }

    let facts: Vec<Fact> = window
        .iter()
        .filter(|m| contains_standalone_i(&m.text))
        .map(|m| Fact { person: m.speaker.clone(), statement: m.text.clone() })
        .collect();

    let events: Vec<Event> = window
        .iter()
        .filter(|m| contains_temporal_trigger(&m.text))
        .map(|m| Event {
            description: m.text.clone(),
            temporal_ref: session.timestamp.raw.clone(),
        })
        .collect();

    let mut counts: std::collections::BTreeMap<String, usize> = Default::default();
    for m in window {
        for tok in alpha_tokens(&m.text) {
            if tok.chars().count() >= 4 && !STOPWORDS.contains(&tok.as_str()) {
                *counts.entry(tok).or_default() += 1;
            }
        }
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
    // Frequency descending, then lexicographic; BTreeMap gives the lex order.
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let keywords: Vec<String> = ranked.into_iter().take(5).map(|(k, _)| k).collect();

    let concatenated: Vec<&str> = window
        .iter()
        .flat_map(|m| m.text.split_whitespace())
        .take(25)
        .collect();
    let summary = concatenated.join(" ");

    let tag = keywords.first().cloned().unwrap_or_else(|| "general".to_string());

    MemoryNote {
        start,
        end,
        summary: if summary.is_empty() { format!("messages {start} to {end}") } else { summary },
        keywords,
        persons,
        facts,
        events,
        tag,
    }
}

/// Deterministic stand-in extractor: fixed windows with 1-message overlap and
/// rule-based note fields. A pure function of (session, config).
pub fn fallback_extract(
    session: &ConversationSession,
    cfg: &ExtractionConfig,
) -> Result<Vec<MemoryNote>, ExtractError> {
    if session.is_empty() {
        return Err(ExtractError::EmptySession);
    }
    let len = session.len();
    let window = cfg.fallback_window.max(2);
    let mut notes = Vec::new();
    let mut start = 0usize;
    loop {
        let end = (start + window - 1).min(len - 1);
        notes.push(synthesize_note(session, start, end));
        if end == len - 1 {
            break;
        }
        start = end; // 1-message overlap
    }
    Ok(notes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChunkMode {
    Fixed,
    Semantic,
}

pub const FIXED_CHUNK_TOKENS: usize = 512;
pub const FIXED_CHUNK_OVERLAP_FRACTION: f64 = 0.25;
pub const SEMANTIC_SPLIT_PERCENTILE: f64 = 8.0;

fn message_tokens(session: &ConversationSession) -> Vec<usize> {
    session
        .messages
        .iter()
        .map(|m| m.text.split_whitespace().count())
        .collect()
}

/// Baseline chunkers. Fixed mode packs whole messages greedily up to 512
/// whitespace tokens per chunk and restarts each next chunk far enough back
/// that at least 25% of the previous chunk's tokens repeat (backing up whole
/// messages, at most chunk_len - 1 of them). Semantic mode places a boundary
/// after message i whenever the adjacent-pair similarity falls strictly below
/// the 8th percentile of all adjacent similarities.
pub fn chunk_baseline(
    session: &ConversationSession,
    mode: ChunkMode,
    embedder: &dyn Embedder,
) -> Result<Vec<(usize, usize)>, ExtractError> {
    if session.is_empty() {
        return Err(ExtractError::EmptySession);
    }
    let len = session.len();
    match mode {
        ChunkMode::Fixed => {
            let tokens = message_tokens(session);
            let total: usize = tokens.iter().sum();
            if total <= FIXED_CHUNK_TOKENS {
                return Ok(vec![(0, len - 1)]);
            }
            let mut chunks = Vec::new();
            let mut start = 0usize;
            loop {
                let mut end = start;
                let mut chunk_tokens = tokens[start];
                while end + 1 < len && chunk_tokens + tokens[end + 1] <= FIXED_CHUNK_TOKENS {
                    end += 1;
                    chunk_tokens += tokens[end];
                }
                chunks.push((start, end));
                if end == len - 1 {
                    break;
                }
                let target = (chunk_tokens as f64 * FIXED_CHUNK_OVERLAP_FRACTION).ceil() as usize;
                let mut next_start = end + 1;
                let mut overlap = 0usize;
                while next_start > start + 1 && overlap < target {
                    next_start -= 1;
                    overlap += tokens[next_start];
                }
                start = next_start;
            }
            Ok(chunks)
        }
        ChunkMode::Semantic => {
            if len == 1 {
                return Ok(vec![(0, 0)]);
            }
            let embs: Vec<Vec<f32>> = session
                .messages
                .iter()
                .map(|m| embedder.embed(&m.text))
                .collect::<Result<_, _>>()?;
            let sims: Vec<f64> = (0..len - 1)
                .map(|i| pair_similarity(&embs[i], &embs[i + 1]))
                .collect();
            let threshold = percentile(&sims, SEMANTIC_SPLIT_PERCENTILE);
            let mut chunks = Vec::new();
            let mut start = 0usize;
            for (i, &sim) in sims.iter().enumerate() {
                if sim < threshold {
                    chunks.push((start, i));
                    start = i + 1;
                }
            }
            chunks.push((start, len - 1));
            Ok(chunks)
        }
    }
}

fn pair_similarity(a: &[f32], b: &[f32]) -> f64 {
    // Zero-vector messages (empty text) get similarity 0 rather than an error.
    cosine_similarity(a, b).map(|s| s as f64).unwrap_or(0.0)
}

/// Linearly interpolated percentile over the sorted values. A nearest-rank
/// percentile cannot work here: the minimum is never strictly below its own
/// value, so the bottom similarity would never trigger a split.
fn percentile(values: &[f64], p: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (p / 100.0) * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
