//! Acceptance gate: nine gating criteria, each printed as one PASS/FAIL
//! line, plus one optional non-gating full-dataset replication run. Run with
//! `cargo test --test acceptance -- --nocapture` to see the lines on success.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::json;

use tamem::agent::{answer_question, AgentConfig};
use tamem::config::RunConfig;
use tamem::embed::{cosine_similarity, is_zero_vector, Embedder, LocalEmbedder};
use tamem::eval::{
    bleu1, budget_sweep, run_evaluation, token_f1, Category, EvalConfig, EvalUnit, QAItem,
};
use tamem::extract::{chunk_baseline, fallback_extract, smooth_overlap, ChunkMode, ExtractionConfig, FIXED_CHUNK_TOKENS};
use tamem::gateway::{ChatBackend, ChatTurn, FixtureTurn, ScriptedBackend, ToolCall};
use tamem::model::{
    ConversationSession, Event, Fact, MemoryNote, MemoryPage, Message, SessionTimestamp,
};
use tamem::store::{normalize_key, MemoryStore, StringKind, VectorKind};

const WORDS: &[&str] = &[
    "garden", "hiking", "guitar", "travel", "tomatoes", "painting", "marathon", "cooking",
    "sailing", "chess", "pottery", "astronomy",
];
const PEOPLE: &[&str] = &["Joanna", "Marco", "Ann", "Bo", "Priya", "Sam", "Lena", "Omar"];

// ---------------------------------------------------------------------------
// shared fixtures

fn random_page(rng: &mut StdRng, page_id: u64) -> MemoryPage {
    let pick = |rng: &mut StdRng, pool: &[&str]| pool[rng.gen_range(0..pool.len())].to_string();
    let n_kw = rng.gen_range(0..4);
    let n_ev = rng.gen_range(0..3);
    let n_fc = rng.gen_range(0..3);
    let person = pick(rng, PEOPLE);
    MemoryPage {
        page_id,
        conversation_id: "conv".into(),
        session_id: format!("session_{}", page_id / 5 + 1),
        dialogue: vec![Message {
            index: 0,
            speaker: person.clone(),
            text: format!("dialogue text of page {page_id}"),
            source_id: None,
        }],
        note: MemoryNote {
            start: 0,
            end: 0,
            summary: format!("summary {page_id}"),
            keywords: (0..n_kw).map(|_| pick(rng, WORDS)).collect(),
            persons: vec![person.clone()],
            facts: (0..n_fc)
                .map(|_| Fact {
                    person: person.clone(),
                    statement: format!("enjoys {}", pick(rng, WORDS)),
                })
                .collect(),
            events: (0..n_ev)
                .map(|_| Event {
                    description: format!("went {} recently", pick(rng, WORDS)),
                    temporal_ref: "May 2023".into(),
                })
                .collect(),
            tag: pick(rng, WORDS),
        },
        session_timestamp: SessionTimestamp::parse("1:56 pm on 8 May, 2023"),
    }
}

fn agent_store() -> MemoryStore {
    let mut store = MemoryStore::new();
    let mk = |id: u64, tag: &str, kw: &str, person: &str, fact: &str, event: &str| MemoryPage {
        page_id: id,
        conversation_id: "c0".into(),
        session_id: format!("s{id}"),
        dialogue: vec![Message {
            index: 0,
            speaker: person.into(),
            text: format!("dialogue text of page {id}"),
            source_id: None,
        }],
        note: MemoryNote {
            start: 0,
            end: 0,
            summary: format!("summary of page {id}"),
            keywords: vec![kw.into()],
            persons: vec![person.into()],
            facts: vec![Fact { person: person.into(), statement: fact.into() }],
            events: vec![Event { description: event.into(), temporal_ref: "May 2023".into() }],
            tag: tag.into(),
        },
        session_timestamp: SessionTimestamp::parse("1:56 pm on 8 May, 2023"),
    };
    for p in [
        mk(0, "travel", "hiking", "Joanna", "Joanna hiked the ridge trail", "went hiking on the ridge"),
        mk(1, "garden", "tomatoes", "Joanna", "Joanna planted a vegetable garden", "planted tomatoes in the garden"),
        mk(2, "music", "guitar", "Marco", "Marco practices guitar daily", "joined a band rehearsal"),
    ] {
        store.insert_page(p, &LocalEmbedder).unwrap();
    }
    store
}

fn tool_call(id: &str, name: &str, args: serde_json::Value) -> ToolCall {
    ToolCall {
        call_id: id.into(),
        tool_name: name.into(),
        arguments: args.as_object().cloned().unwrap_or_default(),
    }
}

/// The known 3-turn script: list people, fetch Joanna's events, answer.
fn three_turn_fixture() -> Vec<FixtureTurn> {
    vec![
        FixtureTurn {
            tool_calls: vec![tool_call("t1", "list_person_names", json!({}))],
            ..Default::default()
        },
        FixtureTurn {
            tool_calls: vec![tool_call("t2", "get_person_events", json!({"name": "Joanna"}))],
            ..Default::default()
        },
        FixtureTurn {
            content: "Joanna went hiking on the ridge in May 2023.".into(),
            ..Default::default()
        },
    ]
}

fn random_session(rng: &mut StdRng, id: usize, min_msgs: usize, max_msgs: usize) -> ConversationSession {
    let n = rng.gen_range(min_msgs..=max_msgs);
    ConversationSession {
        session_id: format!("session_{id}"),
        timestamp: SessionTimestamp::parse("1:56 pm on 8 May, 2023"),
        messages: (0..n)
            .map(|i| {
                let words = rng.gen_range(1..60);
                let text: Vec<String> = (0..words)
                    .map(|_| WORDS[rng.gen_range(0..WORDS.len())].to_string())
                    .collect();
                Message {
                    index: i,
                    speaker: PEOPLE[rng.gen_range(0..PEOPLE.len())].to_string(),
                    text: text.join(" "),
                    source_id: None,
                }
            })
            .collect(),
    }
}

// ---------------------------------------------------------------------------
// criteria

/// 1: query_string vs linear-scan oracle and query_topk vs brute-force
/// full-sort oracle, on 25 randomized stores.
fn criterion_1() -> Result<String, String> {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(11);
    for trial in 0..25 {
        let n_pages = rng.gen_range(1..=200);
        let pages: Vec<MemoryPage> = (0..n_pages).map(|i| random_page(&mut rng, i)).collect();
        let store = MemoryStore::from_pages(pages.iter().cloned(), &LocalEmbedder)
            .map_err(|e| e.to_string())?;

        // every stored key of each kind, plus 50 absent keys
        let mut probes: Vec<(String, StringKind)> = Vec::new();
        for kind in [StringKind::Keyword, StringKind::Person, StringKind::Tag] {
            for key in store.list_keys(kind) {
                probes.push((key, kind));
            }
        }
        for i in 0..50 {
            probes.push((format!("absentkey{i}"), StringKind::Keyword));
        }
        for (key, kind) in &probes {
            let got = store.query_string(key, *kind).page_ids;
            let want = string_oracle(&pages, key, *kind);
            if got != want {
                return Err(format!(
                    "trial {trial}: query_string({key:?}, {kind:?}) = {got:?}, oracle = {want:?}"
                ));
            }
        }

        for k in [1usize, 3, 5, 10] {
            for kind in [VectorKind::Events, VectorKind::Facts] {
                let query = format!("enjoys {}", WORDS[trial % WORDS.len()]);
                let got = match store.query_topk(&query, kind, k, &LocalEmbedder) {
                    Ok(o) => o.page_ids,
                    Err(e) => return Err(e.to_string()),
                };
                let want = topk_oracle(&pages, &query, kind, k);
                if got != want {
                    return Err(format!(
                        "trial {trial}: query_topk(k={k}, {kind:?}) = {got:?}, oracle = {want:?}"
                    ));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    if elapsed.as_secs_f64() >= 10.0 {
        return Err(format!("index oracle check too slow: {elapsed:?}"));
    }
    Ok(format!("25 stores, all keys + 50 absent, k in {{1,3,5,10}}, {elapsed:?}"))
}

fn string_oracle(pages: &[MemoryPage], key: &str, kind: StringKind) -> Vec<u64> {
    let want = normalize_key(key);
    if want.is_empty() {
        return vec![];
    }
    let mut ids: Vec<u64> = pages
        .iter()
        .filter(|p| match kind {
            StringKind::Keyword => p.note.keywords.iter().any(|k| normalize_key(k) == want),
            StringKind::Person => p.note.persons.iter().any(|k| normalize_key(k) == want),
            StringKind::Tag => normalize_key(&p.note.tag) == want,
        })
        .map(|p| p.page_id)
        .collect();
    ids.sort_unstable();
    ids.dedup();
    ids
}

fn topk_oracle(pages: &[MemoryPage], query: &str, kind: VectorKind, k: usize) -> Vec<u64> {
    let query_vec = LocalEmbedder.embed(query).unwrap();
    if is_zero_vector(&query_vec) {
        return vec![];
    }
    let mut entries: Vec<(f32, u64, usize)> = Vec::new();
    for p in pages {
        let texts: Vec<&str> = match kind {
            VectorKind::Events => p.note.events.iter().map(|e| e.description.as_str()).collect(),
            VectorKind::Facts => p.note.facts.iter().map(|f| f.statement.as_str()).collect(),
        };
        for t in texts {
            let v = LocalEmbedder.embed(t).unwrap();
            if is_zero_vector(&v) {
                continue;
            }
            let ord = entries.len();
            entries.push((cosine_similarity(&query_vec, &v).unwrap(), p.page_id, ord));
        }
    }
    entries.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    entries.truncate(k.min(50));
    let mut seen = BTreeSet::new();
    let mut ids = Vec::new();
    for (_, id, _) in entries {
        if seen.insert(id) {
            ids.push(id);
        }
    }
    ids
}

/// 2: metric correctness on 20 hand-computed pairs.
fn criterion_2() -> Result<String, String> {
    let e = std::f64::consts::E;
    // (prediction, gold, expected token_f1, expected bleu1)
    let cases: Vec<(&str, &str, f64, f64)> = vec![
        ("I went hiking yesterday", "hiking yesterday", 2.0 / 3.0, 0.5),
        ("hiking", "went hiking yesterday", 0.5, e.powf(-2.0)),
        ("went hiking yesterday", "went hiking yesterday", 1.0, 1.0),
        ("apples oranges", "trains planes", 0.0, 0.0),
        ("The cat", "cat", 1.0, 1.0),
        ("blue car", "blue car fast", 0.8, e.powf(-0.5)),
        ("blue car fast", "blue car", 0.8, 2.0 / 3.0),
        ("dog dog dog", "dog", 0.5, 1.0 / 3.0),
        ("dog", "dog dog dog", 0.5, e.powf(-2.0)),
        ("red green blue", "green blue yellow", 2.0 / 3.0, 2.0 / 3.0),
        ("", "gold", 0.0, 0.0),
        ("pred", "", 0.0, 0.0),
        ("Hello, world!", "hello world", 1.0, 1.0),
        ("an apple and the orange", "apple and orange", 1.0, 1.0),
        ("a", "the", 0.0, 0.0),
        ("one two three four", "one two", 2.0 / 3.0, 0.5),
        ("one two", "one two three four", 2.0 / 3.0, e.powf(-1.0)),
        ("x y z", "x q z", 2.0 / 3.0, 2.0 / 3.0),
        ("paris", "Paris.", 1.0, 1.0),
        ("he was born in May 2021", "May 2021", 0.5, 1.0 / 3.0),
    ];
    assert_eq!(cases.len(), 20);
    for (pred, gold, want_f1, want_b1) in &cases {
        let got_f1 = token_f1(pred, gold);
        let got_b1 = bleu1(pred, gold);
        if (got_f1 - want_f1).abs() > 1e-6 {
            return Err(format!("token_f1({pred:?}, {gold:?}) = {got_f1}, want {want_f1}"));
        }
        if (got_b1 - want_b1).abs() > 1e-6 {
            return Err(format!("bleu1({pred:?}, {gold:?}) = {got_b1}, want {want_b1}"));
        }
    }
    // the three worked examples at their stated precision
    for (got, want) in [
        (token_f1("I went hiking yesterday", "hiking yesterday"), 0.666667),
        (bleu1("I went hiking yesterday", "hiking yesterday"), 0.5),
        (bleu1("hiking", "went hiking yesterday"), 0.135335),
    ] {
        if (got - want).abs() > 1e-6 {
            return Err(format!("worked example drifted: {got} vs {want}"));
        }
    }
    Ok("20 hand-computed metric pairs within 1e-6".into())
}

/// 3: deterministic 3-turn loop with byte-identical transcripts.
fn criterion_3() -> Result<String, String> {
    let store = agent_store();
    let run = || {
        answer_question(
            "What did Joanna do in May?",
            "temporal",
            &store,
            &ScriptedBackend::new(three_turn_fixture()),
            &LocalEmbedder,
            &AgentConfig::default(),
        )
        .map_err(|e| e.to_string())
    };
    let a = run()?;
    let b = run()?;
    if a.record.turns_used != 3 {
        return Err(format!("turns_used = {}", a.record.turns_used));
    }
    if !a.record.success || a.record.forced_final {
        return Err("expected autonomous success".into());
    }
    if a.record.tool_trace.len() != 2 {
        return Err(format!("tool_trace has {} entries", a.record.tool_trace.len()));
    }
    let ta = serde_json::to_vec(&a.transcript).unwrap();
    let tb = serde_json::to_vec(&b.transcript).unwrap();
    if ta != tb {
        return Err("transcripts differ between runs".into());
    }
    Ok("turns_used=3, success, 2 trace entries, byte-identical transcript".into())
}

/// 4: budget 7 terminates with exactly 8 assistant calls.
fn criterion_4() -> Result<String, String> {
    let store = agent_store();
    let backend = ScriptedBackend::repeating(vec![FixtureTurn {
        tool_calls: vec![tool_call("t", "list_tags", json!({}))],
        ..Default::default()
    }]);
    let out = answer_question("q", "multi_hop", &store, &backend, &LocalEmbedder, &AgentConfig::default())
        .map_err(|e| e.to_string())?;
    if backend.calls_made() != 8 {
        return Err(format!("{} assistant calls, want 8", backend.calls_made()));
    }
    if out.record.turns_used != 8 || out.record.success || !out.record.forced_final {
        return Err(format!(
            "turns_used={}, success={}, forced_final={}",
            out.record.turns_used, out.record.success, out.record.forced_final
        ));
    }
    Ok("exactly 8 assistant calls, success=false, forced_final=true".into())
}

/// 5: repeated identical search serves a cache reference, not a re-render.
fn criterion_5() -> Result<String, String> {
    let store = agent_store();
    let search = json!({"query": "planted tomatoes in the garden", "k": 5});
    let backend = ScriptedBackend::new(vec![
        FixtureTurn {
            tool_calls: vec![tool_call("t1", "search_facts", search.clone())],
            ..Default::default()
        },
        FixtureTurn {
            tool_calls: vec![tool_call("t2", "search_facts", search)],
            ..Default::default()
        },
        FixtureTurn { content: "Joanna planted tomatoes.".into(), ..Default::default() },
    ]);
    let out = answer_question("q", "single_hop", &store, &backend, &LocalEmbedder, &AgentConfig::default())
        .map_err(|e| e.to_string())?;
    let transcript_text: String = out
        .transcript
        .iter()
        .map(|t: &ChatTurn| t.content.as_str())
        .collect::<Vec<_>>()
        .join("\n");
    let occurrences = transcript_text.matches("dialogue text of page 1").count();
    if occurrences != 1 {
        return Err(format!("page dialogue rendered {occurrences} times, want 1"));
    }
    if out.record.tool_trace.len() != 2 || !out.record.tool_trace[1].cache_hit {
        return Err("second call not marked cache_hit".into());
    }
    if out.record.tool_trace[0].cache_hit {
        return Err("first call wrongly marked cache_hit".into());
    }
    Ok("dialogue rendered once; second call cache_hit=true".into())
}

/// 6: extraction coverage over 100 random synthetic sessions.
fn criterion_6() -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(23);
    let cfg = ExtractionConfig::default();
    for trial in 0..100 {
        let session = random_session(&mut rng, trial, 1, 60);
        let len = session.len();

        // fallback: full coverage, strictly increasing starts
        let notes = fallback_extract(&session, &cfg).map_err(|e| e.to_string())?;
        let mut covered = vec![false; len];
        let mut last_start = None;
        for n in &notes {
            for i in n.start..=n.end {
                covered[i] = true;
            }
            if let Some(prev) = last_start {
                if n.start <= prev {
                    return Err(format!("trial {trial}: starts not strictly increasing"));
                }
            }
            last_start = Some(n.start);
        }
        if covered.iter().any(|&c| !c) {
            return Err(format!("trial {trial}: fallback left indices uncovered"));
        }

        // smoothing a disjoint partition with overlap 1 => exactly 1 shared
        // message between adjacent ranges
        if len >= 2 {
            let cut = rng.gen_range(1..len);
            let parts = vec![bare(0, cut - 1), bare(cut, len - 1)];
            let smoothed = smooth_overlap(&parts, 1, len);
            let overlap = parts[0].end as i64 - smoothed[1].start as i64 + 1;
            if smoothed[0].start != 0 || overlap != 1 {
                return Err(format!("trial {trial}: smoothed overlap {overlap}, want 1"));
            }
        }

        // fixed chunks: bounded size, sufficient overlap
        let tokens: Vec<usize> = session
            .messages
            .iter()
            .map(|m| m.text.split_whitespace().count())
            .collect();
        let total: usize = tokens.iter().sum();
        let chunks = chunk_baseline(&session, ChunkMode::Fixed, &LocalEmbedder)
            .map_err(|e| e.to_string())?;
        for (i, &(s, e)) in chunks.iter().enumerate() {
            let size: usize = tokens[s..=e].iter().sum();
            if total > FIXED_CHUNK_TOKENS && size > FIXED_CHUNK_TOKENS {
                return Err(format!("trial {trial}: chunk of {size} tokens"));
            }
            if i > 0 {
                let (ps, pe) = chunks[i - 1];
                let prev_tokens: usize = tokens[ps..=pe].iter().sum();
                let overlap: usize = if s <= pe { tokens[s..=pe].iter().sum() } else { 0 };
                let target = (prev_tokens as f64 * 0.25).ceil() as usize;
                if overlap < target && s != ps + 1 {
                    return Err(format!(
                        "trial {trial}: chunk overlap {overlap} < {target} without hitting the one-message cap"
                    ));
                }
            }
        }
    }
    Ok("100 sessions: coverage, smoothing overlap=1, fixed-chunk bounds".into())
}

fn bare(start: usize, end: usize) -> MemoryNote {
    MemoryNote {
        start,
        end,
        summary: "s".into(),
        keywords: vec![],
        persons: vec![],
        facts: vec![],
        events: vec![],
        tag: "t".into(),
    }
}

/// 7: sweep success rates [0, 0, 1, 1] over budgets [1, 2, 3, 4].
fn criterion_7() -> Result<String, String> {
    let unit = EvalUnit {
        conversation_id: "c0".into(),
        store: agent_store(),
        qa: vec![QAItem {
            question: "What did Joanna do in May?".into(),
            gold_answer: Some("went hiking".into()),
            category: Category::Temporal,
            evidence_ids: vec![],
        }],
    };
    let make = || -> Box<dyn ChatBackend> { Box::new(ScriptedBackend::new(three_turn_fixture())) };
    let cfg = EvalConfig { concurrency: 1, ..Default::default() };
    let dir = tempfile::tempdir().unwrap();
    let rows = budget_sweep(
        std::slice::from_ref(&unit),
        &[1, 2, 3, 4],
        &make,
        &LocalEmbedder,
        &cfg,
        Some(dir.path()),
    )
    .map_err(|e| e.to_string())?;
    let rates: Vec<f64> = rows.iter().map(|r| r.success_rate).collect();
    if rates != [0.0, 0.0, 1.0, 1.0] {
        return Err(format!("success rates {rates:?}, want [0, 0, 1, 1]"));
    }
    if rates.windows(2).any(|w| w[1] < w[0]) {
        return Err("success rate not nondecreasing".into());
    }
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).map_err(|e| e.to_string())?;
    let header = csv.lines().next().unwrap_or("");
    if header != "budget,success_rate,f1,bleu1,mean_tokens" {
        return Err(format!("sweep.csv header {header:?}"));
    }
    if csv.lines().count() != 5 {
        return Err("sweep.csv should have 4 data rows".into());
    }
    Ok("success rates [0,0,1,1]; nondecreasing; CSV schema correct".into())
}

/// 8: fresh config defaults are k=5 and budget=7.
fn criterion_8() -> Result<String, String> {
    let run_cfg = RunConfig::default();
    let agent_cfg = AgentConfig::default();
    if run_cfg.k != 5 || run_cfg.budget != 7 || agent_cfg.k != 5 || agent_cfg.budget != 7 {
        return Err(format!(
            "defaults k={}/{} budget={}/{}",
            run_cfg.k, agent_cfg.k, run_cfg.budget, agent_cfg.budget
        ));
    }
    Ok("k=5, budget=7 in both RunConfig and AgentConfig".into())
}

/// 9: the stats subcommand regenerates tool_stats.csv byte-identically.
fn criterion_9() -> Result<String, String> {
    // three questions, each a (tool call, answer) pair in one replay script
    let unit = EvalUnit {
        conversation_id: "c0".into(),
        store: agent_store(),
        qa: vec![
            QAItem {
                question: "q1".into(),
                gold_answer: Some("hiking".into()),
                category: Category::Temporal,
                evidence_ids: vec![],
            },
            QAItem {
                question: "q2".into(),
                gold_answer: Some("tomatoes".into()),
                category: Category::SingleHop,
                evidence_ids: vec![],
            },
            QAItem {
                question: "q3".into(),
                gold_answer: None,
                category: Category::Adversarial,
                evidence_ids: vec![],
            },
        ],
    };
    let backend = ScriptedBackend::new(vec![
        FixtureTurn {
            tool_calls: vec![tool_call("t1", "get_person_events", json!({"name": "Joanna"}))],
            ..Default::default()
        },
        FixtureTurn { content: "hiking".into(), ..Default::default() },
        FixtureTurn {
            tool_calls: vec![tool_call("t2", "search_facts", json!({"query": "tomatoes"}))],
            ..Default::default()
        },
        FixtureTurn { content: "tomatoes".into(), ..Default::default() },
        FixtureTurn { content: "No information available.".into(), ..Default::default() },
    ]);
    let dir = tempfile::tempdir().unwrap();
    let cfg = EvalConfig { concurrency: 1, ..Default::default() };
    run_evaluation(
        std::slice::from_ref(&unit),
        &backend,
        &LocalEmbedder,
        &cfg,
        Some(dir.path()),
    )
    .map_err(|e| e.to_string())?;

    let original = std::fs::read(dir.path().join("tool_stats.csv")).map_err(|e| e.to_string())?;
    let regen_path = dir.path().join("regenerated.csv");
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_tamem"))
        .arg("stats")
        .arg("--log")
        .arg(dir.path().join("per_question.jsonl"))
        .arg("--out")
        .arg(&regen_path)
        .status()
        .map_err(|e| e.to_string())?;
    if !status.success() {
        return Err(format!("stats subcommand exited with {status}"));
    }
    let regenerated = std::fs::read(&regen_path).map_err(|e| e.to_string())?;
    if original != regenerated {
        return Err("regenerated tool_stats.csv differs from original".into());
    }
    Ok("tool_stats.csv regenerated byte-identically by the stats subcommand".into())
}

/// 10 (optional, non-gating): full-dataset replication against a remote
/// backend. Runs only when TAMEM_REPLICATION_CONFIG points at a run config.
fn criterion_10() -> Option<Result<String, String>> {
    let cfg_path = std::env::var("TAMEM_REPLICATION_CONFIG").ok()?;
    let common = tamem::cli::CommonArgs {
        config: Some(cfg_path.into()),
        dataset: None,
        store_dir: None,
        out_dir: None,
        backend: None,
        model: None,
        fixture: None,
        extractor: None,
        budget: None,
        k: None,
    };
    let cli = tamem::cli::Cli {
        command: tamem::cli::Command::Eval(common),
    };
    Some(match tamem::cli::run(cli) {
        Ok(()) => Ok("replication eval completed; see report.csv for Table-shaped output".into()),
        Err(e) => Err(e.message().to_string()),
    })
}

#[test]
fn acceptance_gate() {
    let criteria: Vec<(&str, fn() -> Result<String, String>)> = vec![
        ("1 index-oracle equivalence", criterion_1),
        ("2 metric correctness", criterion_2),
        ("3 deterministic loop", criterion_3),
        ("4 budget enforcement", criterion_4),
        ("5 cache dedup", criterion_5),
        ("6 extraction coverage", criterion_6),
        ("7 sweep mechanics", criterion_7),
        ("8 defaults audit", criterion_8),
        ("9 statistics identity", criterion_9),
    ];
    let mut failures = Vec::new();
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(e) => {
                println!("FAIL criterion {name}: {e}");
                failures.push(name);
            }
        }
    }
    match criterion_10() {
        None => println!("SKIP criterion 10 (optional replication): TAMEM_REPLICATION_CONFIG not set"),
        Some(Ok(detail)) => println!("PASS criterion 10 (optional): {detail}"),
        Some(Err(e)) => println!("INFO criterion 10 (optional, non-gating) failed: {e}"),
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
