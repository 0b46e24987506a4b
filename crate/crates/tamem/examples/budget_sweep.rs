//! Sweeps the agent's iteration budget over a known 3-turn script. The
//! question needs 3 assistant turns to finalize, so budgets 1 and 2 force an
//! early answer (success 0) while budgets 3 and 4 finish autonomously.
//!
//! Run with: cargo run --example budget_sweep

use std::path::Path;

use tamem::embed::LocalEmbedder;
use tamem::eval::{budget_sweep, default_category_mapping, ingest_locomo, EvalConfig, EvalUnit};
use tamem::extract::ExtractionConfig;
use tamem::gateway::{ChatBackend, ScriptedBackend};
use tamem::pipeline::{build_conversation_store, memory_store_from, ExtractorChoice};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let (conversations, _) = ingest_locomo(&base.join("solo_locomo.json"), &default_category_mapping())?;
    let conv = &conversations[0];

    let cs = build_conversation_store(
        &conv.conversation_id,
        &conv.sessions,
        ExtractorChoice::Fallback,
        None,
        &LocalEmbedder,
        &ExtractionConfig::default(),
    )?;
    let unit = EvalUnit {
        conversation_id: conv.conversation_id.clone(),
        store: memory_store_from(&cs, &LocalEmbedder)?,
        qa: conv.qa.clone(),
    };

    let fixture = std::fs::read_to_string(base.join("sweep_fixture.json"))?;
    // fresh backend per budget so the replay starts from turn one each time
    let make = move || -> Box<dyn ChatBackend> {
        Box::new(ScriptedBackend::from_json(&fixture).expect("fixture parses"))
    };

    let cfg = EvalConfig { concurrency: 1, ..Default::default() };
    let out_dir = std::env::temp_dir().join("tamem_example_sweep");
    let rows = budget_sweep(
        std::slice::from_ref(&unit),
        &[1, 2, 3, 4],
        &make,
        &LocalEmbedder,
        &cfg,
        Some(&out_dir),
    )?;

    for r in &rows {
        println!(
            "budget={} success_rate={:.2} F1={:.4} BLEU-1={:.4}",
            r.budget, r.success_rate, r.f1, r.bleu1
        );
    }
    println!("sweep.csv in {}", out_dir.display());
    Ok(())
}
