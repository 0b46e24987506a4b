//! Batch command-line front end: build memory, ask a single question, run
//! the evaluation, sweep iteration budgets, and re-derive tool statistics
//! from an existing run log.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{BackendChoice, EmbedderChoice, RunConfig};
use crate::embed::{Embedder, LocalEmbedder, RemoteEmbedder};
use crate::eval::{
    budget_sweep, ingest_locomo, run_evaluation, tool_stats_from_logs, write_tool_stats_csv,
    EvalUnit,
};
use crate::gateway::{ChatBackend, RemoteBackend, ScriptedBackend};
use crate::pipeline::{
    build_conversation_store, load_conversation_store, memory_store_from, save_conversation_store,
    ExtractorChoice,
};

#[derive(Debug)]
pub enum CliError {
    /// Usage or configuration problem; exit code 2.
    Usage(String),
    /// Runtime failure; exit code 1.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => m,
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Parser)]
#[command(
    name = "tamem",
    version,
    about = "Tool-augmented conversational memory engine and QA evaluation harness"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Ingest a dataset, extract memory pages, and persist one store file
    /// per conversation
    Build(CommonArgs),
    /// Answer a single question against built memory and print the tool trace
    Ask {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        question: String,
        /// Conversation id to query; defaults to the first conversation
        #[arg(long)]
        conversation: Option<String>,
    },
    /// Run the full evaluation and write report.csv, report.json,
    /// per_question.jsonl, and tool_stats.csv
    Eval(CommonArgs),
    /// Run the evaluation once per iteration budget and write sweep.csv
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        budgets: Vec<u32>,
    },
    /// Recompute the tool-distribution table from a per-question .jsonl log
    Stats {
        #[arg(long)]
        log: PathBuf,
        /// Output CSV path; defaults to tool_stats.csv next to the log
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
pub struct CommonArgs {
    /// JSON config file; flags override file values
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub store_dir: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Backend: remote or scripted
    #[arg(long)]
    pub backend: Option<String>,
    /// Remote model name override
    #[arg(long)]
    pub model: Option<String>,
    /// Scripted-backend fixture file (JSON list of canned turns)
    #[arg(long)]
    pub fixture: Option<PathBuf>,
    /// Extractor: llm, fallback, fixed, or semantic
    #[arg(long)]
    pub extractor: Option<String>,
    #[arg(long)]
    pub budget: Option<u32>,
    #[arg(long)]
    pub k: Option<usize>,
}

pub fn resolve_config(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => {
            if !path.exists() {
                return Err(CliError::Usage(format!(
                    "config file not found: {}",
                    path.display()
                )));
            }
            RunConfig::load(path).map_err(|e| CliError::Usage(e.to_string()))?
        }
        None => RunConfig::default(),
    };
    if let Some(v) = &common.dataset {
        cfg.dataset_path = Some(v.clone());
    }
    if let Some(v) = &common.store_dir {
        cfg.store_dir = Some(v.clone());
    }
    if let Some(v) = &common.out_dir {
        cfg.out_dir = Some(v.clone());
    }
    if let Some(v) = &common.backend {
        cfg.backend = match v.as_str() {
            "remote" => BackendChoice::Remote,
            "scripted" => BackendChoice::Scripted,
            other => {
                return Err(CliError::Usage(format!(
                    "unknown backend {other:?}; expected remote or scripted"
                )))
            }
        };
    }
    if let Some(v) = &common.model {
        match &mut cfg.remote {
            Some(remote) => remote.model_name = v.clone(),
            None => {
                return Err(CliError::Usage(
                    "--model requires a remote backend config (set \"remote\" in the config file)"
                        .into(),
                ))
            }
        }
    }
    if let Some(v) = &common.fixture {
        cfg.scripted_fixture = Some(v.clone());
    }
    if let Some(v) = &common.extractor {
        cfg.extractor = match v.as_str() {
            "llm" => ExtractorChoice::Llm,
            "fallback" => ExtractorChoice::Fallback,
            "fixed" => ExtractorChoice::Fixed,
            "semantic" => ExtractorChoice::Semantic,
            other => {
                return Err(CliError::Usage(format!(
                    "unknown extractor {other:?}; expected llm, fallback, fixed, or semantic"
                )))
            }
        };
    }
    if let Some(v) = common.budget {
        cfg.budget = v;
    }
    if let Some(v) = common.k {
        cfg.k = v;
    }
    Ok(cfg)
}

fn make_backend(cfg: &RunConfig) -> Result<Box<dyn ChatBackend>, CliError> {
    match cfg.backend {
        BackendChoice::Scripted => {
            let path = cfg.scripted_fixture.as_ref().ok_or_else(|| {
                CliError::Usage("scripted backend requires --fixture or scripted_fixture".into())
            })?;
            let raw = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read fixture {}: {e}", path.display())))?;
            Ok(Box::new(
                ScriptedBackend::from_json(&raw).map_err(|e| CliError::Usage(e.to_string()))?,
            ))
        }
        BackendChoice::Remote => {
            let remote = cfg.remote.clone().ok_or_else(|| {
                CliError::Usage("remote backend requires a \"remote\" config section".into())
            })?;
            Ok(Box::new(RemoteBackend::new(remote).map_err(runtime)?))
        }
    }
}

fn make_embedder(cfg: &RunConfig) -> Result<Box<dyn Embedder>, CliError> {
    match cfg.embedder {
        EmbedderChoice::Local => Ok(Box::new(LocalEmbedder)),
        EmbedderChoice::Remote => {
            let remote = cfg.remote_embedder.clone().ok_or_else(|| {
                CliError::Usage("remote embedder requires a \"remote_embedder\" config section".into())
            })?;
            Ok(Box::new(RemoteEmbedder::new(remote).map_err(runtime)?))
        }
    }
}

fn dataset_path(cfg: &RunConfig) -> Result<&Path, CliError> {
    cfg.dataset_path
        .as_deref()
        .ok_or_else(|| CliError::Usage("a dataset path is required (--dataset)".into()))
}

/// Loads or builds the per-conversation evaluation units. Existing store
/// files under store_dir are reused so builds resume conversation by
/// conversation.
fn load_units(cfg: &RunConfig, embedder: &dyn Embedder) -> Result<Vec<EvalUnit>, CliError> {
    let mapping = cfg.category_mapping().map_err(|e| CliError::Usage(e.to_string()))?;
    let (conversations, report) =
        ingest_locomo(dataset_path(cfg)?, &mapping).map_err(runtime)?;
    eprintln!(
        "ingested {} conversations, {} sessions, {} questions ({} without gold answers)",
        report.conversations, report.sessions, report.questions, report.missing_answers
    );
    for (cat, n) in &report.category_counts {
        eprintln!("  {cat}: {n}");
    }

    let backend = if cfg.extractor == ExtractorChoice::Llm {
        Some(make_backend(cfg)?)
    } else {
        None
    };
    let mut units = Vec::new();
    for conv in conversations {
        let store_file = cfg
            .store_dir
            .as_ref()
            .map(|d| d.join(format!("{}.json", conv.conversation_id)));
        let cs = match &store_file {
            Some(path) if path.exists() => load_conversation_store(path).map_err(runtime)?,
            _ => {
                let cs = build_conversation_store(
                    &conv.conversation_id,
                    &conv.sessions,
                    cfg.extractor,
                    backend.as_deref(),
                    embedder,
                    &cfg.extraction_config(),
                )
                .map_err(runtime)?;
                if let Some(dir) = &cfg.store_dir {
                    save_conversation_store(&cs, dir).map_err(runtime)?;
                }
                cs
            }
        };
        units.push(EvalUnit {
            conversation_id: conv.conversation_id.clone(),
            store: memory_store_from(&cs, embedder).map_err(runtime)?,
            qa: conv.qa,
        });
    }
    Ok(units)
}

fn out_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("tamem_out"))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Build(common) => {
            let cfg = resolve_config(&common)?;
            if cfg.store_dir.is_none() {
                return Err(CliError::Usage("build requires --store-dir".into()));
            }
            let embedder = make_embedder(&cfg)?;
            let units = load_units(&cfg, embedder.as_ref())?;
            cfg.echo(cfg.store_dir.as_ref().unwrap())
                .map_err(runtime)?;
            let pages: usize = units.iter().map(|u| u.store.page_count()).sum();
            println!(
                "built {} conversation stores ({} memory pages) under {}",
                units.len(),
                pages,
                cfg.store_dir.as_ref().unwrap().display()
            );
            Ok(())
        }
        Command::Ask {
            common,
            question,
            conversation,
        } => {
            let cfg = resolve_config(&common)?;
            let embedder = make_embedder(&cfg)?;
            let units = load_units(&cfg, embedder.as_ref())?;
            let unit = match &conversation {
                Some(id) => units
                    .iter()
                    .find(|u| &u.conversation_id == id)
                    .ok_or_else(|| CliError::Usage(format!("unknown conversation {id:?}")))?,
                None => units
                    .first()
                    .ok_or_else(|| CliError::Runtime("dataset has no conversations".into()))?,
            };
            let backend = make_backend(&cfg)?;
            let outcome = crate::agent::answer_question(
                &question,
                "ad_hoc",
                &unit.store,
                backend.as_ref(),
                embedder.as_ref(),
                &cfg.agent_config(),
            )
            .map_err(runtime)?;
            println!("{}", outcome.record.answer);
            for entry in &outcome.record.tool_trace {
                let args = serde_json::to_string(&entry.arguments).unwrap_or_default();
                println!(
                    "  {} {} -> {} bytes{}",
                    entry.tool_name,
                    args,
                    entry.result_size,
                    if entry.cache_hit { " (cache hit)" } else { "" }
                );
            }
            println!(
                "turns: {}  tokens: {}  success: {}",
                outcome.record.turns_used, outcome.record.usage.total_tokens, outcome.record.success
            );
            Ok(())
        }
        Command::Eval(common) => {
            let cfg = resolve_config(&common)?;
            let embedder = make_embedder(&cfg)?;
            let units = load_units(&cfg, embedder.as_ref())?;
            let backend = make_backend(&cfg)?;
            let out = out_dir(&cfg);
            cfg.echo(&out).map_err(runtime)?;
            let (report, _) = run_evaluation(
                &units,
                backend.as_ref(),
                embedder.as_ref(),
                &cfg.eval_config(),
                Some(&out),
            )
            .map_err(runtime)?;
            for row in &report.rows {
                println!(
                    "{:<12} n={:<5} F1={:.4} BLEU-1={:.4} tokens={:.1} turns={:.2}",
                    row.category, row.count, row.mean_f1, row.mean_bleu1, row.mean_tokens, row.mean_turns
                );
            }
            println!(
                "overall: tokens={:.1} turns={:.2} success_rate={:.4}",
                report.overall_mean_tokens, report.overall_mean_turns, report.success_rate
            );
            println!("reports written to {}", out.display());
            Ok(())
        }
        Command::Sweep { common, budgets } => {
            let cfg = resolve_config(&common)?;
            if budgets.iter().any(|&b| b == 0) {
                return Err(CliError::Usage("budgets must be >= 1".into()));
            }
            let embedder = make_embedder(&cfg)?;
            let units = load_units(&cfg, embedder.as_ref())?;
            let out = out_dir(&cfg);
            cfg.echo(&out).map_err(runtime)?;
            let cfg_ref = &cfg;
            let factory = move || -> Box<dyn ChatBackend> {
                make_backend(cfg_ref).expect("backend config already validated")
            };
            // Validate the backend config once up front so the factory's
            // expect can only fire on I/O races.
            make_backend(&cfg)?;
            let rows = budget_sweep(
                &units,
                &budgets,
                &factory,
                embedder.as_ref(),
                &cfg.eval_config(),
                Some(&out),
            )
            .map_err(runtime)?;
            for r in &rows {
                println!(
                    "budget={:<3} success={:.4} F1={:.4} BLEU-1={:.4} tokens={:.1}",
                    r.budget, r.success_rate, r.f1, r.bleu1, r.mean_tokens
                );
            }
            println!("sweep written to {}", out.join("sweep.csv").display());
            Ok(())
        }
        Command::Stats { log, out } => {
            let logs = crate::eval::read_jsonl(&log).map_err(|e| match e {
                crate::eval::EvalError::Io { .. } => CliError::Usage(e.to_string()),
                other => CliError::Runtime(other.to_string()),
            })?;
            let stats = tool_stats_from_logs(&logs);
            let out_path = out.unwrap_or_else(|| {
                log.parent()
                    .unwrap_or_else(|| Path::new("."))
                    .join("tool_stats.csv")
            });
            write_tool_stats_csv(&stats, &out_path).map_err(runtime)?;
            println!("tool statistics written to {}", out_path.display());
            Ok(())
        }
    }
}
