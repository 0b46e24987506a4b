//! Resolved run configuration.
//!
//! A run is configured by a single JSON document; command-line flags
//! override file values, and environment variables supply only secrets.
//! Unknown keys are rejected rather than ignored. Every run echoes its
//! fully resolved config into the output directory so any report is
//! reproducible from its artifacts alone.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{AgentConfig, DEFAULT_BUDGET, DEFAULT_K, DEFAULT_TOKEN_CEILING};
use crate::embed::RemoteEmbedderConfig;
use crate::eval::locomo::{Category, CategoryMapping};
use crate::eval::metrics::Normalization;
use crate::eval::run::EvalConfig;
use crate::gateway::RemoteBackendConfig;
use crate::pipeline::ExtractorChoice;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {message}")]
    Invalid { path: String, message: String },
    #[error("category mapping key {0:?} is not an integer")]
    BadMappingKey(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendChoice {
    Remote,
    Scripted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedderChoice {
    Local,
    Remote,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub dataset_path: Option<PathBuf>,
    pub store_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub backend: BackendChoice,
    pub scripted_fixture: Option<PathBuf>,
    pub remote: Option<RemoteBackendConfig>,
    pub embedder: EmbedderChoice,
    pub remote_embedder: Option<RemoteEmbedderConfig>,
    pub extractor: ExtractorChoice,
    pub k: usize,
    pub budget: u32,
    pub concurrency: usize,
    pub token_ceiling: u64,
    /// Integer-keyed category mapping, keys as strings for JSON.
    pub category_mapping: BTreeMap<String, Category>,
    /// Overrides the built-in prompt templates when set; expects
    /// extraction.txt and qa_system.txt inside.
    pub prompts_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset_path: None,
            store_dir: None,
            out_dir: None,
            backend: BackendChoice::Scripted,
            scripted_fixture: None,
            remote: None,
            embedder: EmbedderChoice::Local,
            remote_embedder: None,
            extractor: ExtractorChoice::Llm,
            k: DEFAULT_K,
            budget: DEFAULT_BUDGET,
            concurrency: 4,
            token_ceiling: DEFAULT_TOKEN_CEILING,
            category_mapping: default_mapping_strings(),
            prompts_dir: None,
        }
    }
}

fn default_mapping_strings() -> BTreeMap<String, Category> {
    BTreeMap::from([
        ("1".to_string(), Category::MultiHop),
        ("2".to_string(), Category::Temporal),
        ("3".to_string(), Category::OpenDomain),
        ("4".to_string(), Category::SingleHop),
        ("5".to_string(), Category::Adversarial),
    ])
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let raw = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        serde_json::from_str(&raw).map_err(|e| ConfigError::Invalid {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn category_mapping(&self) -> Result<CategoryMapping, ConfigError> {
        self.category_mapping
            .iter()
            .map(|(k, &v)| {
                k.parse::<i64>()
                    .map(|i| (i, v))
                    .map_err(|_| ConfigError::BadMappingKey(k.clone()))
            })
            .collect()
    }

    pub fn agent_config(&self) -> AgentConfig {
        let system_prompt = self
            .prompts_dir
            .as_ref()
            .and_then(|d| std::fs::read_to_string(d.join("qa_system.txt")).ok())
            .unwrap_or_else(|| crate::agent::DEFAULT_QA_PROMPT.to_string());
        AgentConfig {
            budget: self.budget,
            k: self.k,
            token_ceiling: self.token_ceiling,
            system_prompt,
        }
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            agent: self.agent_config(),
            normalization: Normalization::default(),
            concurrency: self.concurrency,
        }
    }

    pub fn extraction_config(&self) -> crate::extract::ExtractionConfig {
        let mut cfg = crate::extract::ExtractionConfig::default();
        if let Some(dir) = &self.prompts_dir {
            if let Ok(prompt) = std::fs::read_to_string(dir.join("extraction.txt")) {
                cfg.prompt_template = prompt;
            }
        }
        cfg
    }

    /// Writes the fully resolved config into the output directory.
    pub fn echo(&self, out_dir: &Path) -> Result<(), ConfigError> {
        std::fs::create_dir_all(out_dir).map_err(|e| ConfigError::Io {
            path: out_dir.display().to_string(),
            source: e,
        })?;
        let path = out_dir.join("resolved_config.json");
        let body = serde_json::to_string_pretty(self).expect("config serializes");
        std::fs::write(&path, body).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            source: e,
        })
    }
}
