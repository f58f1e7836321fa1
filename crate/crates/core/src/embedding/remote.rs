//! HTTP client for a sentence-embedding service.
//!
//! Wire protocol (JSON over HTTP/1.1):
//!
//! - `POST /embed` with `{"texts":[..],"normalize":bool}` answers
//!   `{"model":str,"dim":int,"embeddings":[[..],..]}`, rows in input order.
//! - `GET /health` answers `{"status":"ok","model":str,"dim":int}`.
//!
//! A request carries at most [`MAX_BATCH`] texts; larger inputs are split
//! into chunks that are sent with bounded parallelism and reassembled in
//! order.

use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{l2_normalize, Embedding, EmbeddingBackend, EmbeddingError};

/// Model name reported by the service and the rows it returned.
pub type ModelRows = (String, Vec<Vec<f64>>);

pub const MAX_BATCH: usize = 256;

#[derive(Debug, thiserror::Error)]
pub enum RemoteError {
    #[error("empty batch: nothing to embed")]
    EmptyBatch,
    #[error("batch of {0} texts exceeds the per-request limit of {MAX_BATCH}")]
    BatchTooLarge(usize),
    #[error("cannot reach embedding service at {endpoint} after {attempts} attempt(s): {message}")]
    Connection {
        endpoint: String,
        attempts: usize,
        message: String,
    },
    #[error("embedding service returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("embedding service protocol violation: {0}")]
    Protocol(String),
}

impl RemoteError {
    pub fn is_network(&self) -> bool {
        matches!(
            self,
            RemoteError::Connection { .. } | RemoteError::Status { .. } | RemoteError::Protocol(_)
        )
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
    normalize: bool,
}

#[derive(Deserialize)]
struct EmbedResponse {
    model: String,
    dim: usize,
    embeddings: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
pub struct Health {
    pub status: String,
    pub model: String,
    pub dim: usize,
}

#[derive(Clone, Debug)]
pub struct RemoteClient {
    endpoint: String,
    agent: ureq::Agent,
    /// Attempts per request for connection-level failures.
    pub attempts: usize,
    pub backoff: Duration,
    /// Maximum chunks in flight.
    pub parallelism: usize,
}

impl RemoteClient {
    pub fn new(endpoint: impl Into<String>) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout_connect(Duration::from_secs(5))
            .timeout(Duration::from_secs(300))
            .build();
        Self {
            endpoint: endpoint.into().trim_end_matches('/').to_owned(),
            agent,
            attempts: 3,
            backoff: Duration::from_millis(250),
            parallelism: 4,
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn with_retry<T>(
        &self,
        mut call: impl FnMut() -> Result<ureq::Response, ureq::Error>,
        parse: impl Fn(ureq::Response) -> Result<T, RemoteError>,
    ) -> Result<T, RemoteError> {
        let attempts = self.attempts.max(1);
        let mut last = String::new();
        for attempt in 1..=attempts {
            match call() {
                Ok(resp) => return parse(resp),
                Err(ureq::Error::Status(status, resp)) => {
                    let body = resp.into_string().unwrap_or_default();
                    return Err(RemoteError::Status { status, body });
                }
                Err(ureq::Error::Transport(t)) => {
                    last = t.to_string();
                    if attempt < attempts {
                        thread::sleep(self.backoff * attempt as u32);
                    }
                }
            }
        }
        Err(RemoteError::Connection {
            endpoint: self.endpoint.clone(),
            attempts,
            message: last,
        })
    }

    pub fn health(&self) -> Result<Health, RemoteError> {
        let url = format!("{}/health", self.endpoint);
        self.with_retry(
            || self.agent.get(&url).call(),
            |resp| {
                resp.into_json::<Health>()
                    .map_err(|e| RemoteError::Protocol(format!("bad /health body: {e}")))
            },
        )
    }

    /// One `POST /embed` round trip. `texts` must hold 1..=256 entries.
    pub fn embed_request(
        &self,
        texts: &[&str],
        normalize: bool,
    ) -> Result<ModelRows, RemoteError> {
        if texts.is_empty() {
            return Err(RemoteError::EmptyBatch);
        }
        if texts.len() > MAX_BATCH {
            return Err(RemoteError::BatchTooLarge(texts.len()));
        }
        let url = format!("{}/embed", self.endpoint);
        let body = EmbedRequest { texts, normalize };
        let resp = self.with_retry(
            || self.agent.post(&url).send_json(&body),
            |resp| {
                resp.into_json::<EmbedResponse>()
                    .map_err(|e| RemoteError::Protocol(format!("bad /embed body: {e}")))
            },
        )?;
        if resp.embeddings.len() != texts.len() {
            return Err(RemoteError::Protocol(format!(
                "sent {} texts, got {} embeddings",
                texts.len(),
                resp.embeddings.len()
            )));
        }
        if let Some((i, row)) = resp
            .embeddings
            .iter()
            .enumerate()
            .find(|(_, r)| r.len() != resp.dim)
        {
            return Err(RemoteError::Protocol(format!(
                "row {i} has {} values, response declares dim {}",
                row.len(),
                resp.dim
            )));
        }
        Ok((resp.model, resp.embeddings))
    }

    /// Embeds any nonempty number of texts, chunking into requests of at
    /// most [`MAX_BATCH`]. Results are in input order.
    pub fn embed_all(
        &self,
        texts: &[&str],
        model: &str,
        normalize: bool,
    ) -> Result<Vec<Embedding>, RemoteError> {
        if texts.is_empty() {
            return Err(RemoteError::EmptyBatch);
        }
        let chunks: Vec<&[&str]> = texts.chunks(MAX_BATCH).collect();
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(texts.len());
        for wave in chunks.chunks(self.parallelism.max(1)) {
            let results: Vec<Result<ModelRows, RemoteError>> = thread::scope(|s| {
                let handles: Vec<_> = wave
                    .iter()
                    .map(|chunk| s.spawn(move || self.embed_request(chunk, normalize)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("embedding request thread panicked"))
                    .collect()
            });
            for r in results {
                let (served, chunk_rows) = r?;
                if served != model {
                    return Err(RemoteError::Protocol(format!(
                        "service runs model {served:?}, expected {model:?}"
                    )));
                }
                rows.extend(chunk_rows);
            }
        }

        let dim = rows[0].len();
        let mut out = Vec::with_capacity(rows.len());
        for (i, values) in rows.into_iter().enumerate() {
            if values.len() != dim {
                return Err(RemoteError::Protocol(format!(
                    "dim changed between chunks: row {i} has {} values, expected {dim}",
                    values.len()
                )));
            }
            let e = Embedding::new(model, values)
                .map_err(|e| RemoteError::Protocol(format!("row {i}: {e}")))?;
            out.push(if normalize { l2_normalize(&e) } else { e });
        }
        Ok(out)
    }
}

/// Embeds `texts` through the service at `endpoint`, expecting it to serve
/// `model`. With `normalize`, every row has unit L2 norm.
pub fn embed_remote(
    texts: &[&str],
    endpoint: &str,
    model: &str,
    normalize: bool,
) -> Result<Vec<Embedding>, RemoteError> {
    RemoteClient::new(endpoint).embed_all(texts, model, normalize)
}

/// A remote service as an [`EmbeddingBackend`]. The backend name is the
/// model id reported by the service.
#[derive(Clone, Debug)]
pub struct RemoteBackend {
    client: RemoteClient,
    model: String,
    dim: usize,
    normalize: bool,
}

impl RemoteBackend {
    /// Asks `/health` for the model and dim. If `model` is given, the
    /// service must be serving it.
    pub fn connect(
        client: RemoteClient,
        model: Option<&str>,
        normalize: bool,
    ) -> Result<Self, RemoteError> {
        let health = client.health()?;
        if health.status != "ok" {
            return Err(RemoteError::Protocol(format!(
                "service status is {:?}",
                health.status
            )));
        }
        if let Some(m) = model {
            if m != health.model {
                return Err(RemoteError::Protocol(format!(
                    "service runs model {:?}, expected {m:?}",
                    health.model
                )));
            }
        }
        if health.dim == 0 {
            return Err(RemoteError::Protocol("service reports dim 0".into()));
        }
        Ok(Self {
            client,
            model: health.model,
            dim: health.dim,
            normalize,
        })
    }
}

impl EmbeddingBackend for RemoteBackend {
    fn name(&self) -> &str {
        &self.model
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Embedding>, EmbeddingError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let out = self.client.embed_all(texts, &self.model, self.normalize)?;
        super::check_batch_dims(&self.model, self.dim, &out)?;
        Ok(out)
    }
}
