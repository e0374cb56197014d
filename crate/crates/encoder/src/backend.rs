use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{EncoderError, Result};

pub const DEFAULT_DIM: usize = 512;

/// Text encoder contract. Implementations must be deterministic.
pub trait EmbeddingBackend: Send + Sync {
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Result<Vec<f64>>;
}

pub fn embed_text(backend: &dyn EmbeddingBackend, text: &str) -> Result<Vec<f64>> {
    let v = backend.embed(text)?;
    if v.len() != backend.dim() {
        return Err(EncoderError::Dimension(format!(
            "backend returned {} values for dimension {}",
            v.len(),
            backend.dim()
        )));
    }
    Ok(v)
}

/// Unit-norm pseudo-random vectors keyed on a digest of the text. For tests.
#[derive(Debug, Clone)]
pub struct HashEmbedding {
    dim: usize,
    seed: u64,
}

impl HashEmbedding {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim > 0, "dimension must be positive");
        HashEmbedding { dim, seed }
    }
}

impl EmbeddingBackend for HashEmbedding {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(text.as_bytes());
        let mut rng = ChaCha8Rng::from_seed(hasher.finalize().into());
        loop {
            let v: Vec<f64> = (0..self.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-6 {
                return Ok(v.into_iter().map(|x| x / norm).collect());
            }
        }
    }
}

/// Client for an OpenAI-style `/embeddings` endpoint.
pub struct HttpEmbedding {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    dim: usize,
    client: reqwest::blocking::Client,
}

impl HttpEmbedding {
    pub fn new(endpoint: &str, model: &str, api_key: Option<String>, dim: usize) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(60))
            .build()
            .map_err(|e| EncoderError::Backend(e.to_string()))?;
        Ok(HttpEmbedding {
            endpoint: endpoint.to_string(),
            model: model.to_string(),
            api_key,
            dim,
            client,
        })
    }
}

impl EmbeddingBackend for HttpEmbedding {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        let mut req = self
            .client
            .post(&self.endpoint)
            .json(&json!({ "model": self.model, "input": text }));
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| EncoderError::Backend(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(EncoderError::Backend(format!("http status {status}")));
        }
        let body: Value = resp.json().map_err(|e| EncoderError::Backend(e.to_string()))?;
        let values = body
            .pointer("/data/0/embedding")
            .and_then(Value::as_array)
            .ok_or_else(|| EncoderError::Backend("response has no data[0].embedding".into()))?;
        let v = values
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| EncoderError::Backend("non-numeric embedding".into())))
            .collect::<Result<Vec<_>>>()?;
        if v.len() != self.dim {
            return Err(EncoderError::Dimension(format!(
                "endpoint returned {} values, expected {}",
                v.len(),
                self.dim
            )));
        }
        Ok(v)
    }
}
