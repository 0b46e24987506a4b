//! Tool-augmented retrieval agent.
//!
//! Registers the ten database tools, runs the decide / dispatch / observe
//! loop under an iteration budget, deduplicates repeated fetches through a
//! per-question cache, and emits a QARecord with the full tool trace and
//! token accounting. A "turn" is one assistant completion call; when the
//! budget-th turn still requests tools, one extra forced-finalization call
//! is made and the question is marked unsuccessful.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::embed::Embedder;
use crate::gateway::{ChatBackend, ChatTurn, GatewayError, ToolCall, ToolSchema, Usage};
use crate::model::MemoryPage;
use crate::store::{normalize_key, MemoryStore, StoreError, StringKind, VectorKind};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("backend failure: {0}")]
    BackendFailure(#[from] GatewayError),
}

pub const DEFAULT_QA_PROMPT: &str = include_str!("../prompts/qa_system.txt");
pub const DEFAULT_BUDGET: u32 = 7;
pub const DEFAULT_K: usize = 5;
pub const DEFAULT_TOKEN_CEILING: u64 = 200_000;

pub const TOOL_NAMES: [&str; 10] = [
    "search_by_keyword",
    "search_by_person",
    "search_by_tag",
    "search_events",
    "search_facts",
    "get_person_events",
    "get_person_facts",
    "list_keywords",
    "list_person_names",
    "list_tags",
];

pub const FORCED_FINAL_MESSAGE: &str =
    "You have used all available tool turns. Answer now from retrieved context.";

#[derive(Debug, Clone)]
pub struct AgentConfig {
    /// Maximum assistant turns before forced finalization.
    pub budget: u32,
    /// Default k for top-k tools when the model omits it.
    pub k: usize,
    /// Per-question token safety valve; the real bound is the turn budget.
    pub token_ceiling: u64,
    pub system_prompt: String,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            budget: DEFAULT_BUDGET,
            k: DEFAULT_K,
            token_ceiling: DEFAULT_TOKEN_CEILING,
            system_prompt: DEFAULT_QA_PROMPT.to_string(),
        }
    }
}

/// Per-question dedup cache; grows monotonically and dies with the question.
#[derive(Debug, Default)]
pub struct SessionCache {
    seen_page_ids: HashSet<u64>,
    seen_profiles: HashSet<(String, VectorKind)>,
}

impl SessionCache {
    pub fn new() -> Self {
        Self::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolTraceEntry {
    pub tool_name: String,
    pub arguments: serde_json::Map<String, Value>,
    pub result_size: usize,
    pub cache_hit: bool,
}

/// One answered question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QARecord {
    pub question: String,
    pub category: String,
    pub answer: String,
    /// Number of assistant completion calls, including the forced one.
    pub turns_used: u32,
    pub tool_trace: Vec<ToolTraceEntry>,
    pub usage: Usage,
    /// True iff the agent finalized autonomously before the budget.
    pub success: bool,
    pub forced_final: bool,
}

pub struct AnswerOutcome {
    pub record: QARecord,
    pub transcript: Vec<ChatTurn>,
}

/// Tool schemas in the chat-completion tool-definition format.
pub fn tool_schemas() -> Vec<ToolSchema> {
    fn schema(name: &str, description: &str, params: Value, required: Value) -> ToolSchema {
        json!({
            "type": "function",
            "function": {
                "name": name,
                "description": description,
                "parameters": {
                    "type": "object",
                    "properties": params,
                    "required": required,
                }
            }
        })
    }
    let name_param = json!({"name": {"type": "string", "description": "person name"}});
    let k_param = json!({"type": "integer", "description": "number of results, default 5"});
    vec![
        schema(
            "search_by_keyword",
            "Return memory pages whose keyword set contains the given keyword (exact match after normalization).",
            json!({"keyword": {"type": "string"}}),
            json!(["keyword"]),
        ),
        schema(
            "search_by_person",
            "Return memory pages that involve or mention the given person.",
            name_param.clone(),
            json!(["name"]),
        ),
        schema(
            "search_by_tag",
            "Return memory pages carrying the given semantic tag.",
            json!({"tag": {"type": "string"}}),
            json!(["tag"]),
        ),
        schema(
            "search_events",
            "Return the pages whose events are most similar to the query text.",
            json!({"query": {"type": "string"}, "k": k_param}),
            json!(["query"]),
        ),
        schema(
            "search_facts",
            "Return the pages whose facts are most similar to the query text.",
            json!({"query": {"type": "string"}, "k": k_param}),
            json!(["query"]),
        ),
        schema(
            "get_person_events",
            "Return every event tied to the person, with temporal references and session timestamps.",
            name_param.clone(),
            json!(["name"]),
        ),
        schema(
            "get_person_facts",
            "Return every fact tied to the person, with session timestamps.",
            name_param,
            json!(["name"]),
        ),
        schema("list_keywords", "List all keyword keys present in the memory database.", json!({}), json!([])),
        schema("list_person_names", "List all person names present in the memory database.", json!({}), json!([])),
        schema("list_tags", "List all semantic tags present in the memory database.", json!({}), json!([])),
    ]
}

const EMPTY_RESULT_HINT: &str =
    "no results; consult list_keywords / list_person_names / list_tags for valid keys";

pub struct DispatchOutcome {
    pub text: String,
    pub cache_hit: bool,
}

fn string_arg<'a>(call: &'a ToolCall, key: &str) -> Result<&'a str, String> {
    call.arguments
        .get(key)
        .and_then(|v| v.as_str())
        .ok_or_else(|| {
            format!(
                "tool '{}' is missing required argument '{}'",
                call.tool_name, key
            )
        })
}

fn k_arg(call: &ToolCall, default_k: usize) -> usize {
    call.arguments
        .get("k")
        .and_then(|v| v.as_u64())
        .map(|k| k.max(1) as usize)
        .unwrap_or(default_k)
}

fn render_page(page: &MemoryPage, score: Option<f32>) -> String {
    let mut out = format!(
        "[page {} | session {} | {}]\n",
        page.page_id, page.session_id, page.session_timestamp.raw
    );
    if let Some(s) = score {
        out.push_str(&format!("similarity: {s:.4}\n"));
    }
    out.push_str(&format!("summary: {}\n", page.note.summary));
    out.push_str(&format!("tag: {}\n", page.note.tag));
    if !page.note.keywords.is_empty() {
        out.push_str(&format!("keywords: {}\n", page.note.keywords.join(", ")));
    }
    out.push_str("dialogue:\n");
    for m in &page.dialogue {
        out.push_str(&format!("  {}: {}\n", m.speaker, m.text));
    }
    if !page.note.events.is_empty() {
        out.push_str("events:\n");
        for e in &page.note.events {
            out.push_str(&format!("  - {} (when: {})\n", e.description, e.temporal_ref));
        }
    }
    if !page.note.facts.is_empty() {
        out.push_str("facts:\n");
        for f in &page.note.facts {
            out.push_str(&format!("  - {}: {}\n", f.person, f.statement));
        }
    }
    out
}

fn render_pages(
    store: &MemoryStore,
    page_ids: &[u64],
    scores: Option<&[f32]>,
    cache: &mut SessionCache,
) -> DispatchOutcome {
    if page_ids.is_empty() {
        return DispatchOutcome { text: EMPTY_RESULT_HINT.to_string(), cache_hit: false };
    }
    let mut blocks = Vec::new();
    let mut any_fresh = false;
    for (i, &id) in page_ids.iter().enumerate() {
        if cache.seen_page_ids.contains(&id) {
            blocks.push(format!("page {id} already retrieved — see above"));
        } else if let Some(page) = store.page(id) {
            any_fresh = true;
            blocks.push(render_page(page, scores.map(|s| s[i])));
        }
    }
    for &id in page_ids {
        cache.seen_page_ids.insert(id);
    }
    DispatchOutcome { text: blocks.join("\n"), cache_hit: !any_fresh }
}

/// Routes one tool call to the store and renders the result as plain
/// structured text. Unknown tools, missing arguments, and zero-vector
/// queries produce error text that is fed back to the model; the loop
/// always continues.
pub fn dispatch_tool(
    call: &ToolCall,
    store: &MemoryStore,
    cache: &mut SessionCache,
    embedder: &dyn Embedder,
    default_k: usize,
) -> DispatchOutcome {
    let error = |msg: String| DispatchOutcome { text: format!("error: {msg}"), cache_hit: false };
    match call.tool_name.as_str() {
        "search_by_keyword" | "search_by_person" | "search_by_tag" => {
            let (arg_key, kind) = match call.tool_name.as_str() {
                "search_by_keyword" => ("keyword", StringKind::Keyword),
                "search_by_person" => ("name", StringKind::Person),
                _ => ("tag", StringKind::Tag),
            };
            let key = match string_arg(call, arg_key) {
                Ok(v) => v,
                Err(e) => return error(e),
            };
            let out = store.query_string(key, kind);
            render_pages(store, &out.page_ids, None, cache)
        }
        "search_events" | "search_facts" => {
            let query = match string_arg(call, "query") {
                Ok(v) => v,
                Err(e) => return error(e),
            };
            let kind = if call.tool_name == "search_events" {
                VectorKind::Events
            } else {
                VectorKind::Facts
            };
            match store.query_topk(query, kind, k_arg(call, default_k), embedder) {
                Ok(out) => render_pages(store, &out.page_ids, out.scores.as_deref(), cache),
                Err(StoreError::ZeroVectorQuery) => {
                    error("query text embeds to the zero vector; provide a non-empty query".into())
                }
                Err(e) => error(e.to_string()),
            }
        }
        "get_person_events" | "get_person_facts" => {
            let name = match string_arg(call, "name") {
                Ok(v) => v,
                Err(e) => return error(e),
            };
            let kind = if call.tool_name == "get_person_events" {
                VectorKind::Events
            } else {
                VectorKind::Facts
            };
            let profile = store.query_person(name, kind);
            if profile.is_empty() {
                return DispatchOutcome { text: EMPTY_RESULT_HINT.to_string(), cache_hit: false };
            }
            let cache_key = (normalize_key(name), kind);
            let was_cached = cache.seen_profiles.contains(&cache_key);
            cache.seen_profiles.insert(cache_key);
            if was_cached {
                let what = if kind == VectorKind::Events { "events" } else { "facts" };
                return DispatchOutcome {
                    text: format!(
                        "profile of {} ({what}) already retrieved — see above",
                        profile.canonical_name
                    ),
                    cache_hit: true,
                };
            }
            let mut text = format!("profile of {}:\n", profile.canonical_name);
            for e in &profile.events {
                text.push_str(&format!(
                    "  - {} (when: {}; session: {}; page {})\n",
                    e.description, e.temporal_ref, e.session_timestamp, e.page_id
                ));
            }
            for f in &profile.facts {
                text.push_str(&format!(
                    "  - {} (session: {}; page {})\n",
                    f.statement, f.session_timestamp, f.page_id
                ));
            }
            DispatchOutcome { text, cache_hit: false }
        }
        "list_keywords" | "list_person_names" | "list_tags" => {
            let kind = match call.tool_name.as_str() {
                "list_keywords" => StringKind::Keyword,
                "list_person_names" => StringKind::Person,
                _ => StringKind::Tag,
            };
            let keys = store.list_keys(kind);
            let text = if keys.is_empty() {
                "no keys of this type are present".to_string()
            } else {
                format!("available keys: {}", keys.join(", "))
            };
            DispatchOutcome { text, cache_hit: false }
        }
        unknown => error(format!(
            "unknown tool '{unknown}'; valid tools: {}",
            TOOL_NAMES.join(", ")
        )),
    }
}

/// Runs the agentic loop for one question. Never issues more than
/// `budget + 1` assistant calls.
pub fn answer_question(
    question: &str,
    category: &str,
    store: &MemoryStore,
    llm: &dyn ChatBackend,
    embedder: &dyn Embedder,
    cfg: &AgentConfig,
) -> Result<AnswerOutcome, AgentError> {
    let schemas = tool_schemas();
    let mut messages = vec![
        ChatTurn::system(cfg.system_prompt.clone()),
        ChatTurn::user(question.to_string()),
    ];
    let mut cache = SessionCache::new();
    let mut usage = Usage::default();
    let mut trace: Vec<ToolTraceEntry> = Vec::new();
    let mut turns_used = 0u32;

    loop {
        if usage.total_tokens > cfg.token_ceiling {
            return Err(AgentError::BackendFailure(GatewayError::BudgetExceeded {
                used: usage.total_tokens,
                ceiling: cfg.token_ceiling,
            }));
        }
        let (turn, call_usage) = llm.complete(&messages, &schemas)?;
        turns_used += 1;
        usage.accumulate(&call_usage);

        if turn.tool_calls.is_empty() {
            let answer = turn.content.clone();
            messages.push(turn);
            return Ok(AnswerOutcome {
                record: QARecord {
                    question: question.to_string(),
                    category: category.to_string(),
                    answer,
                    turns_used,
                    tool_trace: trace,
                    usage,
                    success: true,
                    forced_final: false,
                },
                transcript: messages,
            });
        }

        if turns_used >= cfg.budget {
            // Budget-th turn still wants tools: dispatch nothing further,
            // answer the pending calls with stubs to keep the wire protocol
            // valid, and force one final answer.
            let pending: Vec<String> = turn.tool_calls.iter().map(|c| c.call_id.clone()).collect();
            messages.push(turn);
            for call_id in pending {
                messages.push(ChatTurn::tool(call_id, "(not executed: turn budget reached)"));
            }
            messages.push(ChatTurn::user(FORCED_FINAL_MESSAGE.to_string()));
            let (final_turn, final_usage) = llm.complete(&messages, &schemas)?;
            turns_used += 1;
            usage.accumulate(&final_usage);
            let answer = final_turn.content.clone();
            messages.push(final_turn);
            return Ok(AnswerOutcome {
                record: QARecord {
                    question: question.to_string(),
                    category: category.to_string(),
                    answer,
                    turns_used,
                    tool_trace: trace,
                    usage,
                    success: false,
                    forced_final: true,
                },
                transcript: messages,
            });
        }

        let calls = turn.tool_calls.clone();
        messages.push(turn);
        for call in &calls {
            let outcome = dispatch_tool(call, store, &mut cache, embedder, cfg.k);
            trace.push(ToolTraceEntry {
                tool_name: call.tool_name.clone(),
                arguments: call.arguments.clone(),
                result_size: outcome.text.len(),
                cache_hit: outcome.cache_hit,
            });
            messages.push(ChatTurn::tool(call.call_id.clone(), outcome.text));
        }
    }
}
