//! Batch evaluation: drives the retrieval agent over a question set, scores
//! answers, and emits per-category reports, per-question JSON-lines logs,
//! and tool-distribution statistics. The tool table is pure bookkeeping over
//! traces, so the stats subcommand can regenerate it byte-for-byte from the
//! .jsonl log alone.

use std::io::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{answer_question, AgentConfig, QARecord, TOOL_NAMES};
use crate::embed::Embedder;
use crate::eval::locomo::{Category, QAItem};
use crate::eval::metrics::{bleu1_with, token_f1_with, Normalization};
use crate::gateway::ChatBackend;
use crate::store::MemoryStore;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("dataset contains no questions")]
    EmptyDataset,
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed question log line {line}: {message}")]
    MalformedLog { line: usize, message: String },
}

/// One conversation's store plus its questions.
pub struct EvalUnit {
    pub conversation_id: String,
    pub store: MemoryStore,
    pub qa: Vec<QAItem>,
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub agent: AgentConfig,
    pub normalization: Normalization,
    pub concurrency: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            agent: AgentConfig::default(),
            normalization: Normalization::default(),
            concurrency: 4,
        }
    }
}

/// One line of the per-question JSON-lines log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuestionLog {
    pub conversation_id: String,
    pub record: QARecord,
    pub gold_answer: Option<String>,
    #[serde(default)]
    pub evidence_ids: Vec<String>,
    pub f1: f64,
    pub bleu1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRow {
    pub category: String,
    pub count: usize,
    pub mean_f1: f64,
    pub mean_bleu1: f64,
    pub mean_tokens: f64,
    pub mean_turns: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolStatsRow {
    pub category: String,
    /// Counts aligned with TOOL_NAMES.
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<CategoryRow>,
    /// Mean token usage over the four quality categories.
    pub overall_mean_tokens: f64,
    /// Mean assistant turns over all five categories.
    pub overall_mean_turns: f64,
    /// Fraction of questions finalized autonomously before the budget.
    pub success_rate: f64,
    pub tool_stats: Vec<ToolStatsRow>,
}

/// Answers every question against its conversation's store and assembles the
/// report. Adversarial items are answered and counted in turn/tool
/// statistics but excluded from quality aggregates. When `out_dir` is given,
/// report.csv, report.json, per_question.jsonl, and tool_stats.csv are
/// written there.
pub fn run_evaluation(
    units: &[EvalUnit],
    backend: &dyn ChatBackend,
    embedder: &dyn Embedder,
    cfg: &EvalConfig,
    out_dir: Option<&Path>,
) -> Result<(EvalReport, Vec<QuestionLog>), EvalError> {
    let work: Vec<(usize, usize)> = units
        .iter()
        .enumerate()
        .flat_map(|(ui, u)| (0..u.qa.len()).map(move |qi| (ui, qi)))
        .collect();
    if work.is_empty() {
        return Err(EvalError::EmptyDataset);
    }

    let results: Mutex<Vec<Option<QuestionLog>>> = Mutex::new(vec![None; work.len()]);
    let next = AtomicUsize::new(0);
    let workers = cfg.concurrency.max(1).min(work.len());

    let answer_one = |wi: usize| {
        let (ui, qi) = work[wi];
        let unit = &units[ui];
        let item = &unit.qa[qi];
        let log = match answer_question(
            &item.question,
            item.category.as_str(),
            &unit.store,
            backend,
            embedder,
            &cfg.agent,
        ) {
            Ok(outcome) => {
                let (f1, b1) = score_item(&outcome.record.answer, item, &cfg.normalization);
                QuestionLog {
                    conversation_id: unit.conversation_id.clone(),
                    record: outcome.record,
                    gold_answer: item.gold_answer.clone(),
                    evidence_ids: item.evidence_ids.clone(),
                    f1,
                    bleu1: b1,
                    error: None,
                }
            }
            Err(e) => QuestionLog {
                conversation_id: unit.conversation_id.clone(),
                record: QARecord {
                    question: item.question.clone(),
                    category: item.category.as_str().to_string(),
                    answer: String::new(),
                    turns_used: 0,
                    tool_trace: vec![],
                    usage: Default::default(),
                    success: false,
                    forced_final: false,
                },
                gold_answer: item.gold_answer.clone(),
                evidence_ids: item.evidence_ids.clone(),
                f1: 0.0,
                bleu1: 0.0,
                error: Some(e.to_string()),
            },
        };
        results.lock().unwrap()[wi] = Some(log);
    };

    if workers <= 1 {
        for wi in 0..work.len() {
            answer_one(wi);
        }
    } else {
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let wi = next.fetch_add(1, Ordering::SeqCst);
                    if wi >= work.len() {
                        break;
                    }
                    answer_one(wi);
                });
            }
        });
    }

    let logs: Vec<QuestionLog> = results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|o| o.expect("every work item produces a log"))
        .collect();
    let report = assemble_report(&logs);

    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        write_jsonl(&logs, &dir.join("per_question.jsonl"))?;
        write_report_csv(&report, &dir.join("report.csv"))?;
        write_report_json(&report, &dir.join("report.json"))?;
        write_tool_stats_csv(&report.tool_stats, &dir.join("tool_stats.csv"))?;
    }
    Ok((report, logs))
}

fn score_item(answer: &str, item: &QAItem, norm: &Normalization) -> (f64, f64) {
    match (&item.gold_answer, item.category.is_quality()) {
        (Some(gold), true) => (
            token_f1_with(answer, gold, norm),
            bleu1_with(answer, gold, norm),
        ),
        _ => (0.0, 0.0),
    }
}

pub fn assemble_report(logs: &[QuestionLog]) -> EvalReport {
    let mut rows = Vec::new();
    for cat in Category::ALL {
        let in_cat: Vec<&QuestionLog> = logs
            .iter()
            .filter(|l| l.record.category == cat.as_str())
            .collect();
        if in_cat.is_empty() {
            continue;
        }
        let n = in_cat.len() as f64;
        let (f1, b1) = if cat.is_quality() {
            (
                in_cat.iter().map(|l| l.f1).sum::<f64>() / n,
                in_cat.iter().map(|l| l.bleu1).sum::<f64>() / n,
            )
        } else {
            (0.0, 0.0)
        };
        rows.push(CategoryRow {
            category: cat.as_str().to_string(),
            count: in_cat.len(),
            mean_f1: f1,
            mean_bleu1: b1,
            mean_tokens: in_cat
                .iter()
                .map(|l| l.record.usage.total_tokens as f64)
                .sum::<f64>()
                / n,
            mean_turns: in_cat.iter().map(|l| l.record.turns_used as f64).sum::<f64>() / n,
        });
    }

    let quality: Vec<&QuestionLog> = logs
        .iter()
        .filter(|l| {
            Category::from_name(&l.record.category)
                .map(|c| c.is_quality())
                .unwrap_or(false)
        })
        .collect();
    let overall_mean_tokens = if quality.is_empty() {
        0.0
    } else {
        quality
            .iter()
            .map(|l| l.record.usage.total_tokens as f64)
            .sum::<f64>()
            / quality.len() as f64
    };
    let overall_mean_turns =
        logs.iter().map(|l| l.record.turns_used as f64).sum::<f64>() / logs.len() as f64;
    let success_rate =
        logs.iter().filter(|l| l.record.success).count() as f64 / logs.len() as f64;

    EvalReport {
        rows,
        overall_mean_tokens,
        overall_mean_turns,
        success_rate,
        tool_stats: tool_stats_from_logs(logs),
    }
}

/// Per-category tool-call counts, recomputable from the log alone.
pub fn tool_stats_from_logs(logs: &[QuestionLog]) -> Vec<ToolStatsRow> {
    let mut rows = Vec::new();
    for cat in Category::ALL {
        let in_cat: Vec<&QuestionLog> = logs
            .iter()
            .filter(|l| l.record.category == cat.as_str())
            .collect();
        if in_cat.is_empty() {
            continue;
        }
        let mut counts = vec![0u64; TOOL_NAMES.len()];
        for log in in_cat {
            for entry in &log.record.tool_trace {
                if let Some(i) = TOOL_NAMES.iter().position(|n| *n == entry.tool_name) {
                    counts[i] += 1;
                }
            }
        }
        rows.push(ToolStatsRow {
            category: cat.as_str().to_string(),
            counts,
        });
    }
    rows
}

fn io_err(path: &Path, e: std::io::Error) -> EvalError {
    EvalError::Io {
        path: path.display().to_string(),
        source: e,
    }
}

pub fn write_jsonl(logs: &[QuestionLog], path: &Path) -> Result<(), EvalError> {
    let mut file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    for log in logs {
        let line = serde_json::to_string(log).expect("log serializes");
        writeln!(file, "{line}").map_err(|e| io_err(path, e))?;
    }
    Ok(())
}

pub fn read_jsonl(path: &Path) -> Result<Vec<QuestionLog>, EvalError> {
    let raw = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    raw.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| EvalError::MalformedLog {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn write_report_csv(report: &EvalReport, path: &Path) -> Result<(), EvalError> {
    let mut out = String::from("category,count,mean_f1,mean_bleu1,mean_tokens,mean_turns\n");
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6},{:.6}\n",
            row.category, row.count, row.mean_f1, row.mean_bleu1, row.mean_tokens, row.mean_turns
        ));
    }
    let total: usize = report.rows.iter().map(|r| r.count).sum();
    out.push_str(&format!(
        "overall,{},{:.6},{:.6},{:.6},{:.6}\n",
        total,
        quality_mean(report, |r| r.mean_f1),
        quality_mean(report, |r| r.mean_bleu1),
        report.overall_mean_tokens,
        report.overall_mean_turns
    ));
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

fn quality_mean(report: &EvalReport, f: impl Fn(&CategoryRow) -> f64) -> f64 {
    let quality: Vec<&CategoryRow> = report
        .rows
        .iter()
        .filter(|r| {
            Category::from_name(&r.category)
                .map(|c| c.is_quality())
                .unwrap_or(false)
        })
        .collect();
    let n: usize = quality.iter().map(|r| r.count).sum();
    if n == 0 {
        return 0.0;
    }
    quality.iter().map(|r| f(r) * r.count as f64).sum::<f64>() / n as f64
}

pub fn write_report_json(report: &EvalReport, path: &Path) -> Result<(), EvalError> {
    let body = serde_json::to_string_pretty(report).expect("report serializes");
    std::fs::write(path, body).map_err(|e| io_err(path, e))
}

pub fn write_tool_stats_csv(rows: &[ToolStatsRow], path: &Path) -> Result<(), EvalError> {
    let mut out = format!("category,{}\n", TOOL_NAMES.join(","));
    for row in rows {
        let counts: Vec<String> = row.counts.iter().map(|c| c.to_string()).collect();
        out.push_str(&format!("{},{}\n", row.category, counts.join(",")));
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub budget: u32,
    pub success_rate: f64,
    pub f1: f64,
    pub bleu1: f64,
    pub mean_tokens: f64,
}

/// Runs the full evaluation once per iteration budget with everything else
/// fixed. `make_backend` supplies a fresh backend per run so replay fixtures
/// start from their first turn each time.
pub fn budget_sweep(
    units: &[EvalUnit],
    budgets: &[u32],
    make_backend: &dyn Fn() -> Box<dyn ChatBackend>,
    embedder: &dyn Embedder,
    base_cfg: &EvalConfig,
    out_dir: Option<&Path>,
) -> Result<Vec<SweepRow>, EvalError> {
    let mut rows = Vec::new();
    for &budget in budgets {
        let mut cfg = base_cfg.clone();
        cfg.agent.budget = budget;
        let backend = make_backend();
        let (report, logs) = run_evaluation(units, backend.as_ref(), embedder, &cfg, None)?;
        let quality: Vec<&QuestionLog> = logs
            .iter()
            .filter(|l| {
                Category::from_name(&l.record.category)
                    .map(|c| c.is_quality())
                    .unwrap_or(false)
            })
            .collect();
        let qn = quality.len().max(1) as f64;
        rows.push(SweepRow {
            budget,
            success_rate: report.success_rate,
            f1: quality.iter().map(|l| l.f1).sum::<f64>() / qn,
            bleu1: quality.iter().map(|l| l.bleu1).sum::<f64>() / qn,
            mean_tokens: report.overall_mean_tokens,
        });
    }
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        write_sweep_csv(&rows, &dir.join("sweep.csv"))?;
    }
    Ok(rows)
}

pub fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<(), EvalError> {
    let mut out = String::from("budget,success_rate,f1,bleu1,mean_tokens\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6}\n",
            r.budget, r.success_rate, r.f1, r.bleu1, r.mean_tokens
        ));
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}
