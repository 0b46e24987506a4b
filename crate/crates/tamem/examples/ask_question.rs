//! Runs the tool-calling agent loop on one question using a scripted
//! backend, so the whole decide/dispatch/observe cycle is visible offline.
//!
//! Run with: cargo run --example ask_question

use std::path::Path;

use tamem::agent::{answer_question, AgentConfig};
use tamem::embed::LocalEmbedder;
use tamem::eval::{default_category_mapping, ingest_locomo};
use tamem::extract::ExtractionConfig;
use tamem::gateway::ScriptedBackend;
use tamem::pipeline::{build_conversation_store, memory_store_from, ExtractorChoice};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let (conversations, _) = ingest_locomo(&base.join("mini_locomo.json"), &default_category_mapping())?;
    let conv = &conversations[0];

    let cs = build_conversation_store(
        &conv.conversation_id,
        &conv.sessions,
        ExtractorChoice::Fallback,
        None,
        &LocalEmbedder,
        &ExtractionConfig::default(),
    )?;
    let store = memory_store_from(&cs, &LocalEmbedder)?;

    // Scripted backend: lists people, fetches Joanna's facts, then answers.
    let fixture = std::fs::read_to_string(base.join("ask_fixture.json"))?;
    let backend = ScriptedBackend::from_json(&fixture)?;

    let question = "What did Joanna plant in her garden?";
    let outcome = answer_question(
        question,
        "single_hop",
        &store,
        &backend,
        &LocalEmbedder,
        &AgentConfig::default(),
    )?;

    println!("Q: {question}");
    println!("A: {}", outcome.record.answer);
    println!("\ntool trace:");
    for entry in &outcome.record.tool_trace {
        println!(
            "  {} {} -> {} bytes (cache_hit={})",
            entry.tool_name,
            serde_json::to_string(&entry.arguments)?,
            entry.result_size,
            entry.cache_hit
        );
    }
    println!(
        "\nturns_used={} success={} total_tokens={} (estimated={})",
        outcome.record.turns_used,
        outcome.record.success,
        outcome.record.usage.total_tokens,
        outcome.record.usage.estimated
    );
    Ok(())
}
