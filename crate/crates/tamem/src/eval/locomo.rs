//! LoCoMo-format dataset ingestion.
//!
//! The dataset ships as a JSON list of samples. Each sample holds a
//! `conversation` object with numbered `session_N` turn lists and
//! `session_N_date_time` strings, plus a `qa` list. Question categories
//! arrive as integers; the integer-to-name mapping is configuration rather
//! than a constant, defaulting to 1=multi_hop, 2=temporal, 3=open_domain,
//! 4=single_hop, 5=adversarial.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::model::{ConversationSession, Message, SessionTimestamp};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },
    #[error("unknown category integer {0}; extend the category mapping")]
    UnknownCategory(i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    MultiHop,
    Temporal,
    OpenDomain,
    SingleHop,
    Adversarial,
}

impl Category {
    pub fn as_str(&self) -> &'static str {
        match self {
            Category::MultiHop => "multi_hop",
            Category::Temporal => "temporal",
            Category::OpenDomain => "open_domain",
            Category::SingleHop => "single_hop",
            Category::Adversarial => "adversarial",
        }
    }

    /// Canonical report order; the first four are the quality categories.
    pub const ALL: [Category; 5] = [
        Category::MultiHop,
        Category::Temporal,
        Category::OpenDomain,
        Category::SingleHop,
        Category::Adversarial,
    ];

    pub fn is_quality(&self) -> bool {
        *self != Category::Adversarial
    }

    pub fn from_name(name: &str) -> Option<Category> {
        Category::ALL.iter().copied().find(|c| c.as_str() == name)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub type CategoryMapping = BTreeMap<i64, Category>;

pub fn default_category_mapping() -> CategoryMapping {
    BTreeMap::from([
        (1, Category::MultiHop),
        (2, Category::Temporal),
        (3, Category::OpenDomain),
        (4, Category::SingleHop),
        (5, Category::Adversarial),
    ])
}

/// One question to evaluate. Gold answers may be absent for adversarial
/// items. Evidence ids are ingested and logged but never scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QAItem {
    pub question: String,
    pub gold_answer: Option<String>,
    pub category: Category,
    #[serde(default)]
    pub evidence_ids: Vec<String>,
}

/// One ingested conversation with its questions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversationData {
    pub conversation_id: String,
    pub sessions: Vec<ConversationSession>,
    pub qa: Vec<QAItem>,
}

/// Validation summary emitted alongside ingestion.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub conversations: usize,
    pub sessions: usize,
    pub questions: usize,
    pub category_counts: BTreeMap<String, usize>,
    pub missing_answers: usize,
}

pub fn ingest_locomo(
    path: &Path,
    mapping: &CategoryMapping,
) -> Result<(Vec<ConversationData>, IngestReport), IngestError> {
    let raw = std::fs::read_to_string(path).map_err(|e| IngestError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let root: Value = serde_json::from_str(&raw).map_err(|e| IngestError::Parse {
        path: "$".into(),
        message: e.to_string(),
    })?;
    ingest_locomo_value(&root, mapping)
}

pub fn ingest_locomo_value(
    root: &Value,
    mapping: &CategoryMapping,
) -> Result<(Vec<ConversationData>, IngestReport), IngestError> {
    let samples = root.as_array().ok_or_else(|| IngestError::Parse {
        path: "$".into(),
        message: "top level must be an array of samples".into(),
    })?;

    let mut out = Vec::new();
    let mut report = IngestReport::default();
    for (si, sample) in samples.iter().enumerate() {
        let conv_path = format!("$[{si}]");
        let conversation_id = sample
            .get("sample_id")
            .and_then(|v| v.as_str())
            .map(|s| s.to_string())
            .unwrap_or_else(|| format!("conv-{si}"));

        let conversation = sample
            .get("conversation")
            .and_then(|v| v.as_object())
            .ok_or_else(|| IngestError::Parse {
                path: format!("{conv_path}.conversation"),
                message: "missing conversation object".into(),
            })?;

        // Collect session numbers, ordered numerically.
        let mut session_numbers: Vec<u64> = conversation
            .keys()
            .filter_map(|k| {
                k.strip_prefix("session_")
                    .filter(|rest| !rest.contains('_'))
                    .and_then(|rest| rest.parse().ok())
            })
            .collect();
        session_numbers.sort_unstable();

        let mut sessions = Vec::new();
        for n in session_numbers {
            let key = format!("session_{n}");
            let turns = conversation
                .get(&key)
                .and_then(|v| v.as_array())
                .ok_or_else(|| IngestError::Parse {
                    path: format!("{conv_path}.conversation.{key}"),
                    message: "session is not a turn array".into(),
                })?;
            if turns.is_empty() {
                continue;
            }
            let ts_raw = conversation
                .get(&format!("session_{n}_date_time"))
                .and_then(|v| v.as_str())
                .unwrap_or("");
            let messages = turns
                .iter()
                .enumerate()
                .map(|(ti, turn)| {
                    let speaker = turn
                        .get("speaker")
                        .and_then(|v| v.as_str())
                        .ok_or_else(|| IngestError::Parse {
                            path: format!("{conv_path}.conversation.{key}[{ti}].speaker"),
                            message: "missing speaker".into(),
                        })?
                        .to_string();
                    let text = turn
                        .get("text")
                        .and_then(|v| v.as_str())
                        .filter(|t| !t.trim().is_empty())
                        .map(|t| t.to_string())
                        .or_else(|| {
                            turn.get("blip_caption")
                                .and_then(|v| v.as_str())
                                .map(|c| format!("(shares an image: {c})"))
                        })
                        .unwrap_or_else(|| "(non-text content)".to_string());
                    Ok(Message {
                        index: ti,
                        speaker,
                        text,
                        source_id: turn
                            .get("dia_id")
                            .and_then(|v| v.as_str())
                            .map(|s| s.to_string()),
                    })
                })
                .collect::<Result<Vec<_>, IngestError>>()?;
            sessions.push(ConversationSession {
                session_id: key,
                timestamp: SessionTimestamp::parse(ts_raw),
                messages,
            });
        }
        report.sessions += sessions.len();

        let qa_list = sample
            .get("qa")
            .and_then(|v| v.as_array())
            .ok_or_else(|| IngestError::Parse {
                path: format!("{conv_path}.qa"),
                message: "missing qa array".into(),
            })?;
        let mut qa = Vec::new();
        for (qi, entry) in qa_list.iter().enumerate() {
            let question = entry
                .get("question")
                .and_then(|v| v.as_str())
                .ok_or_else(|| IngestError::Parse {
                    path: format!("{conv_path}.qa[{qi}]"),
                    message: "missing 'question'".into(),
                })?
                .to_string();
            let category = match entry.get("category") {
                Some(Value::Number(n)) => {
                    let i = n.as_i64().ok_or_else(|| IngestError::Parse {
                        path: format!("{conv_path}.qa[{qi}].category"),
                        message: "category is not an integer".into(),
                    })?;
                    *mapping.get(&i).ok_or(IngestError::UnknownCategory(i))?
                }
                Some(Value::String(s)) => {
                    Category::from_name(s).ok_or_else(|| IngestError::Parse {
                        path: format!("{conv_path}.qa[{qi}].category"),
                        message: format!("unknown category name {s:?}"),
                    })?
                }
                _ => {
                    return Err(IngestError::Parse {
                        path: format!("{conv_path}.qa[{qi}].category"),
                        message: "missing category".into(),
                    })
                }
            };
            let gold_answer = entry
                .get("answer")
                .or_else(|| entry.get("adversarial_answer"))
                .and_then(|v| match v {
                    Value::String(s) => Some(s.clone()),
                    Value::Number(n) => Some(n.to_string()),
                    _ => None,
                });
            if gold_answer.is_none() {
                report.missing_answers += 1;
            }
            let evidence_ids = entry
                .get("evidence")
                .and_then(|v| v.as_array())
                .map(|a| {
                    a.iter()
                        .filter_map(|e| e.as_str().map(|s| s.to_string()))
                        .collect()
                })
                .unwrap_or_default();
            *report
                .category_counts
                .entry(category.as_str().to_string())
                .or_default() += 1;
            report.questions += 1;
            qa.push(QAItem {
                question,
                gold_answer,
                category,
                evidence_ids,
            });
        }
        out.push(ConversationData {
            conversation_id,
            sessions,
            qa,
        });
    }
    report.conversations = out.len();
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn minimal_sample() -> Value {
        json!([
            {
                "sample_id": "conv-a",
                "conversation": {
                    "speaker_a": "Ann",
                    "speaker_b": "Bo",
                    "session_1_date_time": "1:56 pm on 8 May, 2023",
                    "session_1": [
                        {"speaker": "Ann", "dia_id": "D1:1", "text": "hello"},
                        {"speaker": "Bo", "dia_id": "D1:2", "text": "hi"},
                        {"speaker": "Ann", "dia_id": "D1:3", "text": "lovely day"}
                    ],
                    "session_2_date_time": "4:00 pm on 9 June, 2023",
                    "session_2": [
                        {"speaker": "Ann", "dia_id": "D2:1", "text": "long time"},
                        {"speaker": "Bo", "dia_id": "D2:2", "text": "indeed"},
                        {"speaker": "Ann", "dia_id": "D2:3", "text": "see you"}
                    ]
                },
                "qa": [
                    {"question": "When did they meet?", "answer": "8 May 2023", "category": 2, "evidence": ["D1:1"]},
                    {"question": "Who said hi?", "answer": "Bo", "category": 4}
                ]
            }
        ])
    }

    #[test]
    fn minimal_fixture_round_trip() {
        let (convs, report) =
            ingest_locomo_value(&minimal_sample(), &default_category_mapping()).unwrap();
        assert_eq!(convs.len(), 1);
        let c = &convs[0];
        assert_eq!(c.conversation_id, "conv-a");
        assert_eq!(c.sessions.len(), 2);
        assert_eq!(c.sessions[0].timestamp.raw, "1:56 pm on 8 May, 2023");
        assert_eq!(c.sessions[1].session_id, "session_2");
        assert_eq!(c.sessions[0].messages[2].source_id.as_deref(), Some("D1:3"));
        assert_eq!(c.qa.len(), 2);
        assert_eq!(report.questions, 2);
        assert_eq!(report.missing_answers, 0);
    }

    #[test]
    fn default_mapping_sends_two_to_temporal() {
        let (convs, _) =
            ingest_locomo_value(&minimal_sample(), &default_category_mapping()).unwrap();
        assert_eq!(convs[0].qa[0].category, Category::Temporal);
        assert_eq!(convs[0].qa[1].category, Category::SingleHop);
    }

    #[test]
    fn missing_question_names_the_entry() {
        let mut root = minimal_sample();
        root[0]["qa"][1].as_object_mut().unwrap().remove("question");
        let err = ingest_locomo_value(&root, &default_category_mapping()).unwrap_err();
        match err {
            IngestError::Parse { path, .. } => assert!(path.contains("qa[1]"), "path was {path}"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unmapped_category_integer_is_error() {
        let mut root = minimal_sample();
        root[0]["qa"][0]["category"] = json!(9);
        let err = ingest_locomo_value(&root, &default_category_mapping()).unwrap_err();
        assert!(matches!(err, IngestError::UnknownCategory(9)));
    }

    #[test]
    fn adversarial_without_answer_is_counted_not_fatal() {
        let mut root = minimal_sample();
        root[0]["qa"]
            .as_array_mut()
            .unwrap()
            .push(json!({"question": "Did Ann move to Mars?", "category": 5}));
        let (convs, report) =
            ingest_locomo_value(&root, &default_category_mapping()).unwrap();
        assert_eq!(convs[0].qa[2].category, Category::Adversarial);
        assert!(convs[0].qa[2].gold_answer.is_none());
        assert_eq!(report.missing_answers, 1);
        assert_eq!(report.category_counts["adversarial"], 1);
    }

    #[test]
    fn image_turn_falls_back_to_caption() {
        let mut root = minimal_sample();
        root[0]["conversation"]["session_1"]
            .as_array_mut()
            .unwrap()
            .push(json!({"speaker": "Ann", "dia_id": "D1:4", "img_url": "x", "blip_caption": "a dog on a beach"}));
        let (convs, _) = ingest_locomo_value(&root, &default_category_mapping()).unwrap();
        assert!(convs[0].sessions[0].messages[3].text.contains("a dog on a beach"));
    }

    #[test]
    fn sessions_order_numerically_not_lexically() {
        let root = json!([
            {
                "conversation": {
                    "session_10_date_time": "noon", "session_10": [{"speaker": "A", "text": "ten"}],
                    "session_2_date_time": "noon", "session_2": [{"speaker": "A", "text": "two"}]
                },
                "qa": []
            }
        ]);
        let (convs, _) = ingest_locomo_value(&root, &default_category_mapping()).unwrap();
        assert_eq!(convs[0].sessions[0].session_id, "session_2");
        assert_eq!(convs[0].sessions[1].session_id, "session_10");
    }
}
