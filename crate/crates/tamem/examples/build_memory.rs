//! Builds a memory store from a small LoCoMo-shaped dataset with the
//! deterministic fallback extractor and prints the resulting pages.
//!
//! Run with: cargo run --example build_memory

use std::path::Path;

use tamem::embed::LocalEmbedder;
use tamem::eval::{default_category_mapping, ingest_locomo};
use tamem::extract::ExtractionConfig;
use tamem::pipeline::{build_conversation_store, memory_store_from, ExtractorChoice};
use tamem::store::StringKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dataset = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data/mini_locomo.json");
    let (conversations, report) = ingest_locomo(&dataset, &default_category_mapping())?;
    println!(
        "ingested {} conversation(s), {} session(s), {} question(s)",
        report.conversations, report.sessions, report.questions
    );

    for conv in &conversations {
        let cs = build_conversation_store(
            &conv.conversation_id,
            &conv.sessions,
            ExtractorChoice::Fallback,
            None,
            &LocalEmbedder,
            &ExtractionConfig::default(),
        )?;
        println!("\nconversation {}: {} page(s)", cs.conversation_id, cs.pages.len());
        for page in &cs.pages {
            println!(
                "  page {} [{}..{}] session {} tag={:?} keywords={:?}",
                page.page_id, page.note.start, page.note.end, page.session_id,
                page.note.tag, page.note.keywords
            );
        }

        let store = memory_store_from(&cs, &LocalEmbedder)?;
        println!("  persons: {:?}", store.list_keys(StringKind::Person));
        println!("  tags:    {:?}", store.list_keys(StringKind::Tag));
    }
    Ok(())
}
