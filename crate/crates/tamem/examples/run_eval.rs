//! Runs the full batch evaluation over the bundled mini dataset with a
//! scripted backend and prints the per-category report, writing report.csv,
//! report.json, per_question.jsonl, and tool_stats.csv to a temp directory.
//!
//! Run with: cargo run --example run_eval

use std::path::Path;

use tamem::embed::LocalEmbedder;
use tamem::eval::{default_category_mapping, ingest_locomo, run_evaluation, EvalConfig, EvalUnit};
use tamem::extract::ExtractionConfig;
use tamem::gateway::ScriptedBackend;
use tamem::pipeline::{build_conversation_store, memory_store_from, ExtractorChoice};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let (conversations, _) = ingest_locomo(&base.join("mini_locomo.json"), &default_category_mapping())?;

    let mut units = Vec::new();
    for conv in &conversations {
        let cs = build_conversation_store(
            &conv.conversation_id,
            &conv.sessions,
            ExtractorChoice::Fallback,
            None,
            &LocalEmbedder,
            &ExtractionConfig::default(),
        )?;
        units.push(EvalUnit {
            conversation_id: conv.conversation_id.clone(),
            store: memory_store_from(&cs, &LocalEmbedder)?,
            qa: conv.qa.clone(),
        });
    }

    // one canned answer per question, replayed in order
    let fixture = std::fs::read_to_string(base.join("eval_fixture.json"))?;
    let backend = ScriptedBackend::from_json(&fixture)?;

    let cfg = EvalConfig { concurrency: 1, ..Default::default() };
    let out_dir = std::env::temp_dir().join("tamem_example_eval");
    let (report, logs) = run_evaluation(&units, &backend, &LocalEmbedder, &cfg, Some(&out_dir))?;

    for row in &report.rows {
        println!(
            "{:<12} n={} F1={:.4} BLEU-1={:.4} turns={:.2}",
            row.category, row.count, row.mean_f1, row.mean_bleu1, row.mean_turns
        );
    }
    println!(
        "overall: mean_turns={:.2} success_rate={:.2} ({} question(s) logged)",
        report.overall_mean_turns,
        report.success_rate,
        logs.len()
    );
    println!("artifacts in {}", out_dir.display());
    Ok(())
}
