//! Dataset ingestion, answer metrics, batch evaluation, and the
//! iteration-budget sweep.

pub mod locomo;
pub mod metrics;
pub mod run;

pub use locomo::{
    default_category_mapping, ingest_locomo, Category, CategoryMapping, ConversationData,
    IngestError, IngestReport, QAItem,
};
pub use metrics::{bleu1, normalize_answer, token_f1, Normalization};
pub use run::{
    assemble_report, budget_sweep, read_jsonl, run_evaluation, tool_stats_from_logs,
    write_jsonl, write_report_csv, write_report_json, write_sweep_csv, write_tool_stats_csv,
    CategoryRow, EvalConfig, EvalError, EvalReport, EvalUnit, QuestionLog, SweepRow, ToolStatsRow,
};
