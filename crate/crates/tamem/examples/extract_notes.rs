//! Demonstrates the three segmentation strategies on one session: scripted
//! LLM extraction with overlap smoothing, the fixed 512-token chunking
//! baseline, and the semantic-similarity chunking baseline.
//!
//! Run with: cargo run --example extract_notes

use tamem::embed::LocalEmbedder;
use tamem::extract::{
    chunk_baseline, extract_notes, smooth_overlap, ChunkMode, ExtractionConfig,
};
use tamem::gateway::ScriptedBackend;
use tamem::model::{ConversationSession, Message, SessionTimestamp};

fn session() -> ConversationSession {
    let turns = [
        ("Joanna", "I went hiking on the ridge trail yesterday, the views were incredible"),
        ("Marco", "That sounds great, was the trail steep"),
        ("Joanna", "Steep but worth it, I want to go back in June"),
        ("Marco", "Switching topics, my band finally booked a show on Friday"),
        ("Joanna", "Congratulations! Where are you playing"),
        ("Marco", "A small venue downtown, I have been practicing guitar all month"),
    ];
    ConversationSession {
        session_id: "session_1".into(),
        timestamp: SessionTimestamp::parse("1:56 pm on 8 May, 2023"),
        messages: turns
            .iter()
            .enumerate()
            .map(|(i, (speaker, text))| Message {
                index: i,
                speaker: speaker.to_string(),
                text: text.to_string(),
                source_id: None,
            })
            .collect(),
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let session = session();
    let cfg = ExtractionConfig::default();

    // Scripted extraction: the canned reply segments the session into the
    // hiking topic and the band topic, as the real model would.
    let reply = r#"[
      {"start_idx": 0, "end_idx": 2, "summary": "Joanna's ridge trail hike",
       "keywords": ["hiking", "trail"], "persons": ["Joanna", "Marco"],
       "facts": [{"person": "Joanna", "statement": "Joanna hiked the ridge trail"}],
       "events": [{"description": "hiked the ridge trail", "temporal_ref": "7 May 2023"}],
       "tag": "outdoors"},
      {"start_idx": 3, "end_idx": 5, "summary": "Marco's band booked a show",
       "keywords": ["band", "guitar"], "persons": ["Marco", "Joanna"],
       "facts": [{"person": "Marco", "statement": "Marco plays guitar in a band"}],
       "events": [{"description": "band show booked", "temporal_ref": "Friday 12 May 2023"}],
       "tag": "music"}
    ]"#;
    let backend = ScriptedBackend::new(vec![tamem::gateway::FixtureTurn {
        content: reply.to_string(),
        ..Default::default()
    }]);

    let outcome = extract_notes(&session, &backend, &cfg)?;
    println!("LLM extraction ({} repair(s)):", outcome.repairs.len());
    for n in &outcome.notes {
        println!("  [{}..{}] tag={:?} summary={:?}", n.start, n.end, n.tag, n.summary);
    }

    let smoothed = smooth_overlap(&outcome.notes, cfg.overlap_msgs, session.len());
    println!("after overlap smoothing (1 message):");
    for n in &smoothed {
        println!("  [{}..{}] tag={:?}", n.start, n.end, n.tag);
    }

    let fixed = chunk_baseline(&session, ChunkMode::Fixed, &LocalEmbedder)?;
    println!("fixed 512-token chunks: {fixed:?}");

    let semantic = chunk_baseline(&session, ChunkMode::Semantic, &LocalEmbedder)?;
    println!("semantic chunks:        {semantic:?}");
    Ok(())
}
