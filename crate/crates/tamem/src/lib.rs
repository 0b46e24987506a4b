//! A tool-augmented memory engine and evaluation harness for long-term
//! conversational QA.
//!
//! Conversations are segmented into topic-coherent memory pages, each
//! carrying a structured episodic note (summary, keywords, persons, facts,
//! timed events, tag). Pages land in a multi-indexed store queryable by
//! exact key match, cosine top-k over event/fact embeddings, and per-person
//! profiles. A tool-calling agent explores the store autonomously through
//! ten retrieval tools to answer questions, and the eval kit scores the
//! answers with token F1 and BLEU-1.
//!
//! See the `examples/` directory for one runnable example per capability.

pub mod agent;
pub mod cli;
pub mod config;
pub mod embed;
pub mod eval;
pub mod extract;
pub mod gateway;
pub mod model;
pub mod pipeline;
pub mod store;

pub use agent::{answer_question, AgentConfig, QARecord};
pub use config::RunConfig;
pub use embed::{cosine_similarity, Embedder, LocalEmbedder};
pub use eval::{bleu1, ingest_locomo, run_evaluation, token_f1};
pub use gateway::{ChatBackend, ChatTurn, ScriptedBackend, Usage};
pub use model::{build_page, ConversationSession, MemoryNote, MemoryPage, Message};
pub use store::{MemoryStore, PersonProfile, QueryOutcome, StringKind, VectorKind};
