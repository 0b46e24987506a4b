//! Exercises every query surface of the memory store directly: exact string
//! match, cosine top-k over events and facts, person profiles, and key
//! listings.
//!
//! Run with: cargo run --example search_store

use tamem::embed::LocalEmbedder;
use tamem::model::{Event, Fact, MemoryNote, MemoryPage, Message, SessionTimestamp};
use tamem::store::{MemoryStore, StringKind, VectorKind};

fn page(id: u64, tag: &str, person: &str, fact: &str, event: &str) -> MemoryPage {
    MemoryPage {
        page_id: id,
        conversation_id: "demo".into(),
        session_id: format!("session_{}", id + 1),
        dialogue: vec![Message {
            index: 0,
            speaker: person.into(),
            text: fact.into(),
            source_id: None,
        }],
        note: MemoryNote {
            start: 0,
            end: 0,
            summary: fact.into(),
            keywords: vec![tag.into()],
            persons: vec![person.into()],
            facts: vec![Fact { person: person.into(), statement: fact.into() }],
            events: vec![Event { description: event.into(), temporal_ref: "May 2023".into() }],
            tag: tag.into(),
        },
        session_timestamp: SessionTimestamp::parse("1:56 pm on 8 May, 2023"),
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut store = MemoryStore::new();
    for p in [
        page(0, "outdoors", "Joanna", "Joanna hiked the ridge trail", "went hiking on the ridge"),
        page(1, "garden", "Joanna", "Joanna planted a vegetable garden", "planted tomatoes"),
        page(2, "music", "Marco", "Marco practices guitar daily", "joined a band rehearsal"),
    ] {
        store.insert_page(p, &LocalEmbedder)?;
    }

    // exact string match, case/whitespace-insensitive
    let by_person = store.query_string("  JOANNA ", StringKind::Person);
    println!("pages for person 'JOANNA': {:?}", by_person.page_ids);

    let by_tag = store.query_string("garden", StringKind::Tag);
    println!("pages for tag 'garden':   {:?}", by_tag.page_ids);

    let miss = store.query_string("cooking", StringKind::Keyword);
    println!("absent keyword -> ids {:?}, empty_hint={}", miss.page_ids, miss.empty_hint);

    // cosine top-k over fact embeddings (local deterministic embedder)
    let topk = store.query_topk("vegetable garden planting", VectorKind::Facts, 2, &LocalEmbedder)?;
    for (id, score) in topk.page_ids.iter().zip(topk.scores.as_deref().unwrap_or(&[])) {
        println!("top-k fact match: page {id} (similarity {score:.4})");
    }

    // person profile aggregation
    let profile = store.query_person("joanna", VectorKind::Events);
    println!("profile of {}:", profile.canonical_name);
    for e in &profile.events {
        println!("  - {} (when: {}; page {})", e.description, e.temporal_ref, e.page_id);
    }

    // key listings, first-seen casing, sorted by normalized form
    println!("all persons:  {:?}", store.list_keys(StringKind::Person));
    println!("all tags:     {:?}", store.list_keys(StringKind::Tag));
    println!("all keywords: {:?}", store.list_keys(StringKind::Keyword));
    Ok(())
}
