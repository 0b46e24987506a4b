//! Pluggable text-to-vector providers.
//!
//! The local provider is a hashed bag-of-features embedder: word unigrams
//! plus character trigrams hashed with FNV-1a into a fixed 256-dim vector,
//! counts as weights, L2-normalized. It is fully deterministic across
//! platforms, which keeps every ranking test reproducible offline. The
//! remote provider talks to an HTTP embedding endpoint for replication runs.

use serde::Deserialize;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("embedding provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("cosine similarity undefined for a zero vector")]
    ZeroVector,
}

pub trait Embedder: Send + Sync {
    /// Embeds text into a vector of `dimension()` components. Nonempty input
    /// yields a unit vector; empty input yields the zero vector.
    fn embed(&self, text: &str) -> Result<Vec<f32>, EmbedError>;
    fn dimension(&self) -> usize;
}

/// Cosine similarity of two nonzero vectors of equal dimension.
pub fn cosine_similarity(a: &[f32], b: &[f32]) -> Result<f32, EmbedError> {
    if a.len() != b.len() {
        return Err(EmbedError::DimensionMismatch(a.len(), b.len()));
    }
    let mut dot = 0.0f64;
    let mut na = 0.0f64;
    let mut nb = 0.0f64;
    for (&x, &y) in a.iter().zip(b) {
        dot += x as f64 * y as f64;
        na += x as f64 * x as f64;
        nb += y as f64 * y as f64;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(EmbedError::ZeroVector);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0) as f32)
}

pub fn is_zero_vector(v: &[f32]) -> bool {
    v.iter().all(|&x| x == 0.0)
}

pub(crate) fn l2_normalize(v: &mut [f32]) {
    let norm = v.iter().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x = (*x as f64 / norm) as f32;
        }
    }
}

pub const LOCAL_DIMENSION: usize = 256;

/// Deterministic local provider. Pure; never fails.
#[derive(Debug, Default, Clone)]
pub struct LocalEmbedder;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

impl Embedder for LocalEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f32>, EmbedError> {
        let mut v = vec![0.0f32; LOCAL_DIMENSION];
        let lowered = text.to_lowercase();
        if lowered.trim().is_empty() {
            return Ok(v);
        }
        for word in lowered.split_whitespace() {
            let slot = (fnv1a(word.as_bytes()) % LOCAL_DIMENSION as u64) as usize;
            v[slot] += 1.0;
        }
        let chars: Vec<char> = lowered.chars().collect();
        for tri in chars.windows(3) {
            let s: String = tri.iter().collect();
            let slot = (fnv1a(s.as_bytes()) % LOCAL_DIMENSION as u64) as usize;
            v[slot] += 1.0;
        }
        l2_normalize(&mut v);
        Ok(v)
    }

    fn dimension(&self) -> usize {
        LOCAL_DIMENSION
    }
}

/// Config for the remote embedding endpoint. The model name is configuration,
/// never hard-coded; the auth token comes from an environment variable.
#[derive(Debug, Clone, serde::Serialize, Deserialize)]
pub struct RemoteEmbedderConfig {
    pub endpoint_url: String,
    pub model_name: String,
    #[serde(default = "default_embed_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_embed_dimension")]
    pub dimension: usize,
    #[serde(default = "default_embed_timeout_s")]
    pub timeout_s: u64,
}

fn default_embed_key_env() -> String {
    "TAMEM_API_KEY".to_string()
}

fn default_embed_dimension() -> usize {
    384
}

fn default_embed_timeout_s() -> u64 {
    60
}

/// HTTP client for the common JSON embedding-endpoint convention
/// (input strings in, float arrays out).
pub struct RemoteEmbedder {
    cfg: RemoteEmbedderConfig,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    embedding: Vec<f32>,
}

impl RemoteEmbedder {
    pub fn new(cfg: RemoteEmbedderConfig) -> Result<Self, EmbedError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(cfg.timeout_s))
            .build()
            .map_err(|e| EmbedError::ProviderUnavailable(e.to_string()))?;
        Ok(RemoteEmbedder { cfg, client })
    }
}

impl Embedder for RemoteEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f32>, EmbedError> {
        if text.trim().is_empty() {
            return Ok(vec![0.0; self.cfg.dimension]);
        }
        let mut req = self
            .client
            .post(&self.cfg.endpoint_url)
            .json(&json!({ "model": self.cfg.model_name, "input": [text] }));
        if let Ok(key) = std::env::var(&self.cfg.api_key_env) {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .map_err(|e| EmbedError::ProviderUnavailable(e.to_string()))?
            .error_for_status()
            .map_err(|e| EmbedError::ProviderUnavailable(e.to_string()))?;
        let body: EmbeddingResponse = resp
            .json()
            .map_err(|e| EmbedError::ProviderUnavailable(e.to_string()))?;
        let mut v = body
            .data
            .into_iter()
            .next()
            .ok_or_else(|| EmbedError::ProviderUnavailable("empty embedding response".into()))?
            .embedding;
        if v.len() != self.cfg.dimension {
            return Err(EmbedError::DimensionMismatch(v.len(), self.cfg.dimension));
        }
        l2_normalize(&mut v);
        Ok(v)
    }

    fn dimension(&self) -> usize {
        self.cfg.dimension
    }
}
