use std::sync::OnceLock;
use std::time::Duration;

use storygraph_core::embedding::{EmbeddingProvider, EmbeddingVector, ProviderError};

pub const MODEL_HEADER: &str = "x-model-id";

/// Embedding provider backed by an HTTP endpoint that takes a JSON array of
/// strings and answers with one vector per string.
///
/// Calls block, so run them off the async executor.
pub struct RemoteEmbedder {
    url: String,
    client: reqwest::blocking::Client,
    model_id: OnceLock<String>,
    fallback_id: String,
}

impl RemoteEmbedder {
    pub fn new(url: impl Into<String>) -> Result<Self, ProviderError> {
        let url = url.into();
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| ProviderError::Unavailable(e.to_string()))?;
        Ok(Self {
            fallback_id: format!("remote:{url}"),
            url,
            client,
            model_id: OnceLock::new(),
        })
    }
}

impl EmbeddingProvider for RemoteEmbedder {
    /// The id echoed by the endpoint once it has answered, the URL before.
    fn model_id(&self) -> &str {
        self.model_id.get().unwrap_or(&self.fallback_id)
    }

    fn embed_batch(&self, phrases: &[String]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        if phrases.is_empty() {
            return Ok(Vec::new());
        }
        let unavailable = |e: reqwest::Error| ProviderError::Unavailable(e.to_string());
        let response = self
            .client
            .post(&self.url)
            .json(phrases)
            .send()
            .map_err(unavailable)?
            .error_for_status()
            .map_err(unavailable)?;
        if let Some(id) = response.headers().get(MODEL_HEADER).and_then(|v| v.to_str().ok()) {
            let _ = self.model_id.set(id.to_owned());
        }
        let rows: Vec<Vec<f64>> = response.json().map_err(unavailable)?;
        if rows.len() != phrases.len() {
            return Err(ProviderError::BadBatch {
                expected: phrases.len(),
                got: rows.len(),
            });
        }
        rows.into_iter().map(EmbeddingVector::new).collect()
    }
}
