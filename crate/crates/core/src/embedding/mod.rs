//! Fixed-dimension text embeddings and the backends that produce them.
//!
//! Four backends implement [`EmbeddingBackend`]:
//!
//! - [`WordVecBackend`]: averaged pretrained word vectors (the baseline path),
//! - [`StoreBackend`]: lookups in a precomputed JSON Lines store,
//! - [`RemoteBackend`]: an HTTP client for a sentence-embedding service,
//! - [`HashBackend`]: a deterministic pseudo-embedding for tests and demos.

mod hash;
mod remote;
mod store;
mod wordvec;

pub use hash::HashBackend;
pub use remote::{
    embed_remote, Health, ModelRows, RemoteBackend, RemoteClient, RemoteError, MAX_BATCH,
};
pub use store::{store_key, store_load, store_save, EmbeddingStore, StoreBackend, StoreError};
pub use wordvec::{embed_average, load_word_vectors, WordVecBackend, WordVecError, WordVectorTable};

use serde::{Deserialize, Serialize};

/// A finite real vector tagged with the backend that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub values: Vec<f64>,
    pub backend: String,
}

impl Embedding {
    pub fn new(backend: impl Into<String>, values: Vec<f64>) -> Result<Self, EmbeddingError> {
        if values.is_empty() {
            return Err(EmbeddingError::EmptyVector);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(EmbeddingError::NonFinite { index });
        }
        Ok(Self {
            values,
            backend: backend.into(),
        })
    }

    /// The all-zero vector, used for texts with no resolvable tokens.
    pub fn zeros(backend: impl Into<String>, dim: usize) -> Self {
        Self {
            values: vec![0.0; dim],
            backend: backend.into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// True for the zero vector. Degenerate embeddings have no direction;
    /// cosine similarity against them is defined as 0.
    pub fn is_degenerate(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Multiplies every component by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * c).collect(),
            backend: self.backend.clone(),
        }
    }
}

/// Scales `e` to unit Euclidean length. The zero vector is returned
/// unchanged (and stays degenerate).
pub fn l2_normalize(e: &Embedding) -> Embedding {
    let norm = e.norm();
    if norm == 0.0 {
        return e.clone();
    }
    Embedding {
        values: e.values.iter().map(|v| v / norm).collect(),
        backend: e.backend.clone(),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingError {
    #[error("embedding has no components")]
    EmptyVector,
    #[error("embedding component {index} is not finite")]
    NonFinite { index: usize },
    #[error("backend {backend} produced dim {found}, expected {expected}")]
    DimMismatch {
        backend: String,
        expected: usize,
        found: usize,
    },
    #[error("{} text(s) missing from embedding store for backend {backend}: {}", keys.len(), keys.join(", "))]
    MissingFromStore { backend: String, keys: Vec<String> },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Remote(#[from] RemoteError),
}

impl EmbeddingError {
    /// Whether the failure came from talking to a remote service.
    pub fn is_network(&self) -> bool {
        matches!(self, EmbeddingError::Remote(e) if e.is_network())
    }
}

/// A source of embeddings with a fixed name and dimension.
///
/// `embed_batch` must be deterministic for a fixed backend identity and
/// return exactly one embedding per input text, in input order.
pub trait EmbeddingBackend: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Embedding>, EmbeddingError>;

    fn embed(&self, text: &str) -> Result<Embedding, EmbeddingError> {
        let mut out = self.embed_batch(&[text])?;
        Ok(out.pop().expect("one embedding per text"))
    }
}

/// Checks that every embedding in a batch has the backend's declared dim.
pub(crate) fn check_batch_dims(
    backend: &str,
    dim: usize,
    batch: &[Embedding],
) -> Result<(), EmbeddingError> {
    match batch.iter().find(|e| e.dim() != dim) {
        Some(e) => Err(EmbeddingError::DimMismatch {
            backend: backend.to_owned(),
            expected: dim,
            found: e.dim(),
        }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn emb(v: &[f64]) -> Embedding {
        Embedding::new("t", v.to_vec()).unwrap()
    }

    #[test]
    fn normalize_examples() {
        let n = l2_normalize(&emb(&[3.0, 4.0]));
        assert!((n.values[0] - 0.6).abs() < 1e-15);
        assert!((n.values[1] - 0.8).abs() < 1e-15);

        let z = l2_normalize(&emb(&[0.0, 0.0]));
        assert_eq!(z.values, vec![0.0, 0.0]);
        assert!(z.is_degenerate());

        let unit = emb(&[0.0, 1.0, 0.0]);
        assert_eq!(l2_normalize(&unit), unit);
    }

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(matches!(
            Embedding::new("t", vec![1.0, f64::NAN]),
            Err(EmbeddingError::NonFinite { index: 1 })
        ));
        assert!(matches!(
            Embedding::new("t", vec![]),
            Err(EmbeddingError::EmptyVector)
        ));
    }

    proptest! {
        #[test]
        fn normalize_idempotent_and_scale_invariant(
            v in prop::collection::vec(-100.0f64..100.0, 1..20),
            c in 0.01f64..100.0,
        ) {
            let e = emb(&v);
            prop_assume!(e.norm() > 1e-6);
            let once = l2_normalize(&e);
            let twice = l2_normalize(&once);
            let scaled = l2_normalize(&e.scaled(c));
            prop_assert!((once.norm() - 1.0).abs() < 1e-12);
            for i in 0..v.len() {
                prop_assert!((once.values[i] - twice.values[i]).abs() < 1e-12);
                prop_assert!((once.values[i] - scaled.values[i]).abs() < 1e-12);
            }
        }
    }
}
