//! Client for an external embedding service.
//!
//! `POST {endpoint}/embed` with `{"window_words": [...], "numeral_pos": n,
//! "dim": d}`; the service answers `{"vector": [...]}` holding exactly `d`
//! numbers: the mean of the numeral's sub-word embeddings in that window.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::ContextWindow;

use super::{EmbedderId, EmbeddingProvider, EmbeddingVector, MentionKey};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Serialize)]
struct EmbedRequest<'a> {
    window_words: Vec<&'a str>,
    numeral_pos: usize,
    dim: usize,
}

#[derive(Deserialize)]
struct EmbedResponse {
    vector: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RemoteEmbedder {
    endpoint: String,
    dim: usize,
    agent: ureq::Agent,
}

impl RemoteEmbedder {
    pub fn new(endpoint: impl Into<String>, dim: usize, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        RemoteEmbedder {
            endpoint: endpoint.into(),
            dim,
            agent,
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub fn fetch(&self, window: &ContextWindow) -> Result<EmbeddingVector> {
        let url = format!("{}/embed", self.endpoint.trim_end_matches('/'));
        let request = EmbedRequest {
            window_words: window.surfaces(),
            numeral_pos: window.numeral_pos,
            dim: self.dim,
        };
        let mut response = self
            .agent
            .post(&url)
            .send_json(&request)
            .map_err(|e| Error::Transport(format!("{url}: {e}")))?;
        let status = response.status().as_u16();
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| Error::Transport(format!("{url}: reading body: {e}")))?;
        if !(200..300).contains(&status) {
            return Err(Error::Provider { status, body });
        }
        let parsed: EmbedResponse =
            serde_json::from_str(&body).map_err(|e| Error::Protocol(format!("{url}: bad response body: {e}")))?;
        if parsed.vector.len() != self.dim {
            return Err(Error::Protocol(format!(
                "{url}: expected {} values, got {}",
                self.dim,
                parsed.vector.len()
            )));
        }
        EmbeddingVector::new(parsed.vector).map_err(|e| Error::Protocol(format!("{url}: {e}")))
    }
}

impl EmbeddingProvider for RemoteEmbedder {
    fn id(&self) -> EmbedderId {
        EmbedderId::Remote {
            dim: self.dim,
            endpoint: self.endpoint.clone(),
        }
    }

    fn embed(&self, _key: &MentionKey, window: &ContextWindow) -> Result<EmbeddingVector> {
        self.fetch(window)
    }
}

/// One-shot convenience around [`RemoteEmbedder::fetch`].
pub fn fetch_remote_embedding(
    endpoint: &str,
    window: &ContextWindow,
    dim: usize,
    timeout: Duration,
) -> Result<EmbeddingVector> {
    RemoteEmbedder::new(endpoint, dim, timeout).fetch(window)
}
