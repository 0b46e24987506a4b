//! Answer-quality metrics: token F1 and BLEU-1.
//!
//! Both share one normalization (lowercase, punctuation removal, article
//! removal, whitespace collapse). Normalization is the largest
//! cross-toolkit comparability risk for these metrics, so it is
//! configurable rather than baked in. BLEU-1 here is clipped unigram
//! precision with a brevity penalty and no smoothing.

use std::collections::HashMap;

/// Normalization steps applied to both prediction and gold before scoring.
#[derive(Debug, Clone, Copy)]
pub struct Normalization {
    pub lowercase: bool,
    pub strip_punctuation: bool,
    pub remove_articles: bool,
}

impl Default for Normalization {
    fn default() -> Self {
        Normalization {
            lowercase: true,
            strip_punctuation: true,
            remove_articles: true,
        }
    }
}

pub fn normalize_answer(text: &str, cfg: &Normalization) -> String {
    let mut s = if cfg.lowercase {
        text.to_lowercase()
    } else {
        text.to_string()
    };
    if cfg.strip_punctuation {
        s = s.chars().filter(|c| !is_punctuation(*c)).collect();
    }
    let tokens = s.split_whitespace().filter(|t| {
        !(cfg.remove_articles && matches!(*t, "a" | "an" | "the"))
    });
    tokens.collect::<Vec<_>>().join(" ")
}

fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation() || (!c.is_alphanumeric() && !c.is_whitespace())
}

fn token_counts(text: &str) -> (Vec<String>, HashMap<String, usize>) {
    let tokens: Vec<String> = text.split_whitespace().map(|t| t.to_string()).collect();
    let mut counts = HashMap::new();
    for t in &tokens {
        *counts.entry(t.clone()).or_insert(0usize) += 1;
    }
    (tokens, counts)
}

fn multiset_overlap(a: &HashMap<String, usize>, b: &HashMap<String, usize>) -> usize {
    a.iter()
        .map(|(tok, &n)| n.min(b.get(tok).copied().unwrap_or(0)))
        .sum()
}

/// Token-level F1 over normalized answers: harmonic mean of multiset
/// precision and recall. Zero when either side has no tokens or nothing
/// overlaps.
pub fn token_f1_with(prediction: &str, gold: &str, cfg: &Normalization) -> f64 {
    let (pred_tokens, pred_counts) = token_counts(&normalize_answer(prediction, cfg));
    let (gold_tokens, gold_counts) = token_counts(&normalize_answer(gold, cfg));
    if pred_tokens.is_empty() || gold_tokens.is_empty() {
        return 0.0;
    }
    let overlap = multiset_overlap(&pred_counts, &gold_counts);
    if overlap == 0 {
        return 0.0;
    }
    2.0 * overlap as f64 / (pred_tokens.len() + gold_tokens.len()) as f64
}

pub fn token_f1(prediction: &str, gold: &str) -> f64 {
    token_f1_with(prediction, gold, &Normalization::default())
}

/// BLEU-1: brevity-penalized clipped unigram precision of the prediction
/// against the gold answer. Zero when the prediction is empty.
pub fn bleu1_with(prediction: &str, gold: &str, cfg: &Normalization) -> f64 {
    let (pred_tokens, pred_counts) = token_counts(&normalize_answer(prediction, cfg));
    let (gold_tokens, gold_counts) = token_counts(&normalize_answer(gold, cfg));
    if pred_tokens.is_empty() {
        return 0.0;
    }
    let clipped = multiset_overlap(&pred_counts, &gold_counts);
    let p1 = clipped as f64 / pred_tokens.len() as f64;
    let bp = if pred_tokens.len() >= gold_tokens.len() {
        1.0
    } else {
        (1.0 - gold_tokens.len() as f64 / pred_tokens.len() as f64).exp()
    };
    bp * p1
}

pub fn bleu1(prediction: &str, gold: &str) -> f64 {
    bleu1_with(prediction, gold, &Normalization::default())
}
