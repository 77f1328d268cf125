//! Client for an HTTP embedding service.
//!
//! Request `{"texts": [...]}`, response `{"embeddings": [[...], ...]}`, one
//! vector per text in request order. Any non-2xx status is a failure.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::IngestError;

pub const DEFAULT_BATCH_SIZE: usize = 32;

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    embeddings: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct EmbedClient {
    endpoint: String,
    agent: ureq::Agent,
    batch_size: usize,
    concurrency: usize,
}

impl EmbedClient {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            endpoint: endpoint.into(),
            agent,
            batch_size: DEFAULT_BATCH_SIZE,
            concurrency: 1,
        }
    }

    /// Texts per request; values below 1 are treated as 1.
    pub fn batch_size(mut self, n: usize) -> Self {
        self.batch_size = n.max(1);
        self
    }

    /// Requests in flight at once; values below 1 are treated as 1.
    pub fn concurrency(mut self, n: usize) -> Self {
        self.concurrency = n.max(1);
        self
    }

    fn request(&self, batch: usize, texts: &[String]) -> Result<Vec<Vec<f32>>, IngestError> {
        let fail = |message: String| IngestError::EmbedServiceFailure { batch, message };
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .send_json(EmbedRequest { texts })
            .map_err(|e| fail(format!("request to {} failed: {e}", self.endpoint)))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(fail(format!("status {status}")));
        }
        let body: EmbedResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| fail(format!("malformed response: {e}")))?;
        if body.embeddings.len() != texts.len() {
            return Err(fail(format!(
                "{} embeddings for {} texts",
                body.embeddings.len(),
                texts.len()
            )));
        }
        let dim = body.embeddings.first().map_or(0, Vec::len);
        if dim == 0 || body.embeddings.iter().any(|v| v.len() != dim) {
            return Err(fail("embeddings are empty or of unequal length".into()));
        }
        Ok(body
            .embeddings
            .into_iter()
            .map(|v| v.into_iter().map(|x| x as f32).collect())
            .collect())
    }

    /// Embeds `texts`, preserving order. Either every batch succeeds or the
    /// whole call fails with the lowest failing batch index.
    pub fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, IngestError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let chunks: Vec<&[String]> = texts.chunks(self.batch_size).collect();
        let results: Vec<Result<Vec<Vec<f32>>, IngestError>> = if self.concurrency == 1 {
            let mut out = Vec::with_capacity(chunks.len());
            for (i, c) in chunks.iter().enumerate() {
                let r = self.request(i, c);
                let failed = r.is_err();
                out.push(r);
                if failed {
                    break;
                }
            }
            out
        } else {
            let next = AtomicUsize::new(0);
            let slots: Vec<Mutex<Option<Result<_, _>>>> =
                chunks.iter().map(|_| Mutex::new(None)).collect();
            std::thread::scope(|s| {
                for _ in 0..self.concurrency.min(chunks.len()) {
                    s.spawn(|| loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= chunks.len() {
                            break;
                        }
                        let r = self.request(i, chunks[i]);
                        *slots[i].lock().unwrap() = Some(r);
                    });
                }
            });
            slots
                .into_iter()
                .filter_map(|m| m.into_inner().unwrap())
                .collect()
        };

        let mut out = Vec::with_capacity(texts.len());
        let mut dim = None;
        for (i, r) in results.into_iter().enumerate() {
            let vectors = r?;
            let d = vectors[0].len();
            if *dim.get_or_insert(d) != d {
                return Err(IngestError::EmbedServiceFailure {
                    batch: i,
                    message: format!(
                        "dimension {d} differs from earlier batches ({})",
                        dim.unwrap()
                    ),
                });
            }
            out.extend(vectors);
        }
        Ok(out)
    }
}

/// One-shot sequential embedding.
pub fn embed_remote(
    texts: &[String],
    endpoint: &str,
    timeout: Duration,
    batch_size: usize,
) -> Result<Vec<Vec<f32>>, IngestError> {
    EmbedClient::new(endpoint, timeout)
        .batch_size(batch_size)
        .embed(texts)
}
