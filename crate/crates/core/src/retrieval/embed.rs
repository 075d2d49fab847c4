use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};

/// Dense vector with its Euclidean norm cached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    values: Vec<f64>,
    norm: f64,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Self {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        EmbeddingVector { values, norm }
    }

    /// Scales to unit norm. Zero vectors are returned unchanged.
    pub fn normalized(mut self) -> Self {
        if self.norm > 0.0 {
            for v in &mut self.values {
                *v /= self.norm;
            }
            self.norm = self.values.iter().map(|v| v * v).sum::<f64>().sqrt();
        }
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn dot(&self, other: &EmbeddingVector) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn cosine(&self, other: &EmbeddingVector) -> f64 {
        if self.norm == 0.0 || other.norm == 0.0 {
            return 0.0;
        }
        self.dot(other) / (self.norm * other.norm)
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

pub trait EmbeddingProvider: Send + Sync {
    fn dim(&self) -> usize;

    /// Unit-normalized embedding of non-empty text.
    fn embed(&self, text: &str) -> Result<EmbeddingVector>;
}

/// Embed `text`; the empty-input check is shared by every provider.
pub fn embed(text: &str, provider: &dyn EmbeddingProvider) -> Result<EmbeddingVector> {
    if text.trim().is_empty() {
        return Err(Error::Input("cannot embed empty text".into()));
    }
    provider.embed(text)
}

/// Deterministic offline embedder: signed feature hashing of character
/// trigrams over lower-cased, whitespace-collapsed text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashingEmbedder {
    dim: usize,
    seed: u64,
}

pub const DEFAULT_HASHING_SEED: u64 = 0x5eed_da5b;

impl HashingEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        HashingEmbedder { dim, seed }
    }

    fn hash(&self, bytes: &[u8]) -> u64 {
        // FNV-1a, offset basis perturbed by the seed.
        let mut h = 0xcbf2_9ce4_8422_2325_u64 ^ self.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        // Final avalanche so that low bits depend on every input byte.
        h ^= h >> 33;
        h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
        h ^ (h >> 33)
    }
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        HashingEmbedder::new(64, DEFAULT_HASHING_SEED)
    }
}

impl EmbeddingProvider for HashingEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        let norm: Vec<char> = format!(
            " {} ",
            text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
        )
        .chars()
        .collect();
        if norm.len() <= 2 {
            return Err(Error::Input("cannot embed empty text".into()));
        }
        let mut values = vec![0.0; self.dim];
        let mut buf = [0u8; 16];
        for w in norm.windows(3) {
            let mut len = 0;
            for c in w {
                len += c.encode_utf8(&mut buf[len..]).len();
            }
            let h = self.hash(&buf[..len]);
            let slot = (h % self.dim as u64) as usize;
            let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
            values[slot] += sign;
        }
        let v = EmbeddingVector::new(values);
        if v.norm() == 0.0 {
            // Every trigram cancelled out; fall back to a single hashed slot.
            let mut values = vec![0.0; self.dim];
            values[(self.hash(text.as_bytes()) % self.dim as u64) as usize] = 1.0;
            return Ok(EmbeddingVector::new(values));
        }
        Ok(v.normalized())
    }
}

/// Remote embedding endpoint.
///
/// Sends `{"model": ..., "input": text}` and accepts either
/// `{"embedding": [...]}` or `{"data": [{"embedding": [...]}]}`.
pub struct HttpEmbedder {
    url: String,
    model: String,
    dim: usize,
    token: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpEmbedder {
    pub fn new(url: &str, model: &str, dim: usize, token: Option<String>, timeout: Duration) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| Error::Config(format!("http client: {e}")))?;
        Ok(HttpEmbedder {
            url: url.to_string(),
            model: model.to_string(),
            dim,
            token,
            client,
        })
    }
}

impl EmbeddingProvider for HttpEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        let mut req = self
            .client
            .post(&self.url)
            .json(&json!({ "model": self.model, "input": text }));
        if let Some(t) = &self.token {
            req = req.bearer_auth(t);
        }
        let resp = req.send().map_err(|e| Error::Provider {
            message: format!("embedding request failed: {e}"),
            retryable: true,
        })?;
        let status = resp.status();
        if !status.is_success() {
            return Err(Error::Provider {
                message: format!("embedding endpoint returned {status}"),
                retryable: status.is_server_error() || status.as_u16() == 429,
            });
        }
        let body: serde_json::Value = resp.json().map_err(|e| Error::Provider {
            message: format!("embedding response is not JSON: {e}"),
            retryable: false,
        })?;
        let raw = body
            .get("embedding")
            .or_else(|| body.pointer("/data/0/embedding"))
            .and_then(|v| v.as_array())
            .ok_or_else(|| Error::Provider {
                message: "embedding response lacks an embedding array".into(),
                retryable: false,
            })?;
        let values: Vec<f64> = raw.iter().filter_map(|v| v.as_f64()).collect();
        if values.len() != self.dim || values.len() != raw.len() {
            return Err(Error::Provider {
                message: format!(
                    "embedding has {} numeric values, expected {}",
                    values.len(),
                    self.dim
                ),
                retryable: false,
            });
        }
        Ok(EmbeddingVector::new(values).normalized())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_unit_norm() {
        let e = HashingEmbedder::default();
        let a = embed("site dropdown", &e).unwrap();
        let b = embed("site dropdown", &e).unwrap();
        assert_eq!(a, b);
        assert!((a.norm() - 1.0).abs() < 1e-6);
        assert_eq!(a.dim(), 64);
    }

    #[test]
    fn whitespace_and_case_insensitive() {
        let e = HashingEmbedder::default();
        assert_eq!(
            embed("Map  Panel", &e).unwrap(),
            embed("map panel", &e).unwrap()
        );
    }

    #[test]
    fn distinct_phrases_are_not_near_duplicates() {
        let e = HashingEmbedder::new(64, DEFAULT_HASHING_SEED);
        let a = embed("map panel", &e).unwrap();
        let b = embed("site dropdown", &e).unwrap();
        let cos = a.cosine(&b);
        // Frozen from this embedder; the contract only requires < 0.9.
        assert!(cos < 0.9, "cosine {cos}");
    }

    #[test]
    fn empty_text_is_input_error() {
        let e = HashingEmbedder::default();
        assert!(matches!(embed("   ", &e), Err(Error::Input(_))));
    }

    #[test]
    fn seed_changes_embedding() {
        let a = HashingEmbedder::new(64, 1).embed("chart").unwrap();
        let b = HashingEmbedder::new(64, 2).embed("chart").unwrap();
        assert_ne!(a, b);
    }
}
