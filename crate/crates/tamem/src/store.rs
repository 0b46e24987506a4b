//! Multi-indexed memory database.
//!
//! Pages are indexed three ways: string indexes over person / tag / keyword
//! (exact match after normalization), vector indexes over event and fact
//! embeddings (exact brute-force cosine top-k), and per-person aggregates of
//! events and facts. Indexes are derived state: a store is rebuilt from its
//! persisted pages by re-running insertion.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::{is_zero_vector, l2_normalize, EmbedError, Embedder};
use crate::model::MemoryPage;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("page id {0} already present")]
    DuplicatePageId(u64),
    #[error("query text embeds to the zero vector; cosine ranking is undefined")]
    ZeroVectorQuery,
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

/// Index type selector for string queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StringKind {
    Person,
    Tag,
    Keyword,
}

/// Index type selector for vector and profile queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorKind {
    Events,
    Facts,
}

/// Unicode-aware lowercase + trim + internal whitespace collapse.
pub fn normalize_key(s: &str) -> String {
    s.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Result size cap for top-k queries; the default k stays at 5.
pub const MAX_TOP_K: usize = 50;

#[derive(Debug, Clone)]
struct KeyEntry {
    /// First-seen original casing, used for display.
    display: String,
    page_ids: Vec<u64>,
}

#[derive(Debug, Clone)]
struct VectorEntry {
    embedding: Vec<f32>,
    page_id: u64,
}

/// One event in a person profile, carrying both the extracted temporal
/// reference and the owning session's timestamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileEvent {
    pub description: String,
    pub temporal_ref: String,
    pub session_timestamp: String,
    pub page_id: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileFact {
    pub statement: String,
    pub session_timestamp: String,
    pub page_id: u64,
}

/// Aggregated experience of one person across all pages, in page insertion
/// order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PersonProfile {
    pub canonical_name: String,
    pub events: Vec<ProfileEvent>,
    pub facts: Vec<ProfileFact>,
}

impl PersonProfile {
    pub fn is_empty(&self) -> bool {
        self.events.is_empty() && self.facts.is_empty()
    }
}

/// Result carrier for string and top-k queries. `empty_hint` tells the agent
/// loop to surface key-set guidance when nothing matched.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryOutcome {
    pub page_ids: Vec<u64>,
    pub scores: Option<Vec<f32>>,
    pub empty_hint: bool,
}

impl QueryOutcome {
    fn empty() -> Self {
        QueryOutcome {
            page_ids: Vec::new(),
            scores: None,
            empty_hint: true,
        }
    }
}

#[derive(Default)]
pub struct MemoryStore {
    pages: BTreeMap<u64, MemoryPage>,
    next_page_id: u64,
    person_index: BTreeMap<String, KeyEntry>,
    tag_index: BTreeMap<String, KeyEntry>,
    keyword_index: BTreeMap<String, KeyEntry>,
    event_vectors: Vec<VectorEntry>,
    fact_vectors: Vec<VectorEntry>,
    person_aggregates: BTreeMap<String, PersonProfile>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn page(&self, id: u64) -> Option<&MemoryPage> {
        self.pages.get(&id)
    }

    pub fn page_count(&self) -> usize {
        self.pages.len()
    }

    pub fn pages(&self) -> impl Iterator<Item = &MemoryPage> {
        self.pages.values()
    }

    pub fn vector_entry_count(&self, kind: VectorKind) -> usize {
        match kind {
            VectorKind::Events => self.event_vectors.len(),
            VectorKind::Facts => self.fact_vectors.len(),
        }
    }

    /// Inserts a page and registers it under every index. The page keeps the
    /// id it carries; use `next_id()` for the normal monotone path.
    pub fn insert_page(
        &mut self,
        page: MemoryPage,
        embedder: &dyn Embedder,
    ) -> Result<u64, StoreError> {
        let id = page.page_id;
        if self.pages.contains_key(&id) {
            return Err(StoreError::DuplicatePageId(id));
        }

        for person in &page.note.persons {
            index_key(&mut self.person_index, person, id);
        }
        index_key(&mut self.tag_index, &page.note.tag, id);
        for kw in &page.note.keywords {
            index_key(&mut self.keyword_index, kw, id);
        }

        let ts = page.session_timestamp.raw.clone();
        for ev in &page.note.events {
            let mut emb = embedder.embed(&ev.description)?;
            l2_normalize(&mut emb);
            self.event_vectors.push(VectorEntry {
                embedding: emb,
                page_id: id,
            });
        }
        for fact in &page.note.facts {
            let mut emb = embedder.embed(&fact.statement)?;
            l2_normalize(&mut emb);
            self.fact_vectors.push(VectorEntry {
                embedding: emb,
                page_id: id,
            });
        }

        // Person aggregates: facts attach to their stated person; events
        // attach to every person the note names.
        for person in &page.note.persons {
            self.profile_mut(person);
        }
        for ev in &page.note.events {
            for person in &page.note.persons {
                let profile = self.profile_mut(person);
                profile.events.push(ProfileEvent {
                    description: ev.description.clone(),
                    temporal_ref: ev.temporal_ref.clone(),
                    session_timestamp: ts.clone(),
                    page_id: id,
                });
            }
        }
        for fact in &page.note.facts {
            let profile = self.profile_mut(&fact.person);
            profile.facts.push(ProfileFact {
                statement: fact.statement.clone(),
                session_timestamp: ts.clone(),
                page_id: id,
            });
        }

        self.next_page_id = self.next_page_id.max(id + 1);
        self.pages.insert(id, page);
        Ok(id)
    }

    pub fn next_id(&self) -> u64 {
        self.next_page_id
    }

    fn profile_mut(&mut self, person: &str) -> &mut PersonProfile {
        let key = normalize_key(person);
        self.person_aggregates
            .entry(key)
            .or_insert_with(|| PersonProfile {
                canonical_name: person.trim().to_string(),
                ..Default::default()
            })
    }

    /// Exact key-match query over one string index; deterministic order is
    /// ascending page id.
    pub fn query_string(&self, key: &str, kind: StringKind) -> QueryOutcome {
        let index = self.string_index(kind);
        match index.get(&normalize_key(key)) {
            Some(entry) => {
                let mut ids = entry.page_ids.clone();
                ids.sort_unstable();
                ids.dedup();
                QueryOutcome {
                    empty_hint: ids.is_empty(),
                    page_ids: ids,
                    scores: None,
                }
            }
            None => QueryOutcome::empty(),
        }
    }

    /// Brute-force cosine top-k over one vector index. Ranks every entry by
    /// similarity descending (ties: lower page id, then earlier insertion),
    /// takes the top k entries, and collapses duplicate pages to their best
    /// rank. Zero-vector entries never rank.
    pub fn query_topk(
        &self,
        query: &str,
        kind: VectorKind,
        k: usize,
        embedder: &dyn Embedder,
    ) -> Result<QueryOutcome, StoreError> {
        let k = k.min(MAX_TOP_K);
        let entries = self.vector_index(kind);
        if entries.is_empty() {
            return Ok(QueryOutcome::empty());
        }
        let query_emb = embedder.embed(query)?;
        if is_zero_vector(&query_emb) {
            return Err(StoreError::ZeroVectorQuery);
        }

        // Pre-normalized vectors: cosine is a plain dot product.
        let mut ranked: Vec<(f32, u64, usize)> = entries
            .iter()
            .enumerate()
            .filter(|(_, e)| !is_zero_vector(&e.embedding))
            .map(|(i, e)| (dot(&query_emb, &e.embedding), e.page_id, i))
            .collect();
        ranked.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });
        ranked.truncate(k);

        let mut seen = HashSet::new();
        let mut page_ids = Vec::new();
        let mut scores = Vec::new();
        for (score, page_id, _) in ranked {
            if seen.insert(page_id) {
                page_ids.push(page_id);
                scores.push(score);
            }
        }
        Ok(QueryOutcome {
            empty_hint: page_ids.is_empty(),
            page_ids,
            scores: Some(scores),
        })
    }

    /// Person profile lookup; unknown names yield an empty profile.
    pub fn query_person(&self, name: &str, kind: VectorKind) -> PersonProfile {
        match self.person_aggregates.get(&normalize_key(name)) {
            Some(profile) => {
                let mut slice = PersonProfile {
                    canonical_name: profile.canonical_name.clone(),
                    ..Default::default()
                };
                match kind {
                    VectorKind::Events => slice.events = profile.events.clone(),
                    VectorKind::Facts => slice.facts = profile.facts.clone(),
                }
                slice
            }
            None => PersonProfile {
                canonical_name: name.trim().to_string(),
                ..Default::default()
            },
        }
    }

    /// All distinct keys of one type, ordered lexicographically by normalized
    /// form, rendered in first-seen casing.
    pub fn list_keys(&self, kind: StringKind) -> Vec<String> {
        self.string_index(kind)
            .values()
            .map(|e| e.display.clone())
            .collect()
    }

    fn string_index(&self, kind: StringKind) -> &BTreeMap<String, KeyEntry> {
        match kind {
            StringKind::Person => &self.person_index,
            StringKind::Tag => &self.tag_index,
            StringKind::Keyword => &self.keyword_index,
        }
    }

    fn vector_index(&self, kind: VectorKind) -> &[VectorEntry] {
        match kind {
            VectorKind::Events => &self.event_vectors,
            VectorKind::Facts => &self.fact_vectors,
        }
    }

    /// Rebuilds a store from persisted pages by re-running insertion.
    pub fn from_pages(
        pages: impl IntoIterator<Item = MemoryPage>,
        embedder: &dyn Embedder,
    ) -> Result<Self, StoreError> {
        let mut store = MemoryStore::new();
        for page in pages {
            store.insert_page(page, embedder)?;
        }
        Ok(store)
    }
}

fn index_key(index: &mut BTreeMap<String, KeyEntry>, key: &str, page_id: u64) {
    let normalized = normalize_key(key);
    if normalized.is_empty() {
        return;
    }
    let entry = index.entry(normalized).or_insert_with(|| KeyEntry {
        display: key.trim().to_string(),
        page_ids: Vec::new(),
    });
    if entry.page_ids.last() != Some(&page_id) {
        entry.page_ids.push(page_id);
    }
}

fn dot(a: &[f32], b: &[f32]) -> f32 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}
