//! Text embedders: deterministic signed feature hashing, plus a remote
//! endpoint client.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, ScmError};
use crate::model::Embedding;

/// Lowercase alphanumeric tokens of two or more characters.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .map(|t| t.to_lowercase())
}

#[derive(Debug, Clone, Copy)]
pub struct HashEmbedder {
    dim: usize,
}

impl HashEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        HashEmbedder { dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn slot(&self, token: &str) -> (usize, f32) {
        let digest = Sha256::digest(token.as_bytes());
        let mut word = [0u8; 8];
        word.copy_from_slice(&digest[..8]);
        let h = u64::from_le_bytes(word);
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        ((h % self.dim as u64) as usize, sign)
    }

    pub fn embed(&self, text: &str) -> Embedding {
        let mut acc = vec![0.0f32; self.dim];
        for token in tokenize(text) {
            let (i, sign) = self.slot(&token);
            acc[i] += sign;
        }
        Embedding::normalized(acc)
    }
}

#[derive(Serialize)]
struct TextRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    values: Vec<f32>,
}

/// Client for an embedding endpoint that accepts `{"text": ...}` and answers
/// `{"values": [...]}`.
#[derive(Debug, Clone)]
pub struct RemoteEmbedder {
    url: String,
    dim: usize,
    agent: ureq::Agent,
}

#[derive(Debug)]
pub enum RemoteFailure {
    /// Endpoint could not be reached or answered garbage; caller may fall back.
    Unreachable(String),
    /// Endpoint answered with a vector of the wrong dimension.
    Mismatch(ScmError),
}

impl RemoteEmbedder {
    pub fn new(url: impl Into<String>, dim: usize, timeout: Duration) -> Self {
        RemoteEmbedder { url: url.into(), dim, agent: super::http_agent(timeout) }
    }

    pub fn embed(&self, text: &str) -> std::result::Result<Embedding, RemoteFailure> {
        let mut resp = self
            .agent
            .post(&self.url)
            .send_json(TextRequest { text })
            .map_err(|e| RemoteFailure::Unreachable(e.to_string()))?;
        let body: EmbeddingResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| RemoteFailure::Unreachable(e.to_string()))?;
        if body.values.len() != self.dim {
            return Err(RemoteFailure::Mismatch(ScmError::Config(format!(
                "embedding endpoint returned dimension {}, engine expects {}",
                body.values.len(),
                self.dim
            ))));
        }
        Ok(Embedding::normalized(body.values))
    }
}

/// Hash embedder with an optional remote endpoint in front of it.
#[derive(Debug, Clone)]
pub struct Embedder {
    hash: HashEmbedder,
    remote: Option<RemoteEmbedder>,
}

#[derive(Debug, Clone)]
pub struct Embedded {
    pub embedding: Embedding,
    pub degraded: bool,
}

impl Embedder {
    pub fn hashing(dim: usize) -> Self {
        Embedder { hash: HashEmbedder::new(dim), remote: None }
    }

    pub fn with_remote(dim: usize, remote: RemoteEmbedder) -> Self {
        Embedder { hash: HashEmbedder::new(dim), remote: Some(remote) }
    }

    pub fn dim(&self) -> usize {
        self.hash.dim()
    }

    pub fn embed(&self, text: &str) -> Result<Embedded> {
        if text.trim().is_empty() {
            return Err(ScmError::InvalidArgument("cannot embed empty text".into()));
        }
        if let Some(remote) = &self.remote {
            match remote.embed(text) {
                Ok(embedding) => return Ok(Embedded { embedding, degraded: false }),
                Err(RemoteFailure::Mismatch(e)) => return Err(e),
                Err(RemoteFailure::Unreachable(why)) => {
                    tracing::warn!(%why, "embedding endpoint unavailable, using hash embedder");
                    return Ok(Embedded { embedding: self.hash.embed(text), degraded: true });
                }
            }
        }
        Ok(Embedded { embedding: self.hash.embed(text), degraded: false })
    }
}
