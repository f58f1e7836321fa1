//! Deterministic pseudo-embeddings derived from token hashes.
//!
//! Every token maps to a fixed pseudo-random vector in `[-1, 1)^dim`; a text
//! is the mean of its token vectors. Texts sharing words end up close
//! together, which is enough to exercise the whole pipeline without a model.
//!
//! Token vector layout: block `b` of a token is
//! `SHA-256("{seed}:{token}:{b}")`; its 32 bytes give 16 big-endian `u16`
//! values `u`, each mapped to `u / 32768 - 1`. Blocks are concatenated and
//! truncated to `dim`.

use sha2::{Digest, Sha256};

use super::{Embedding, EmbeddingBackend, EmbeddingError};
use crate::preprocess::tokenize;

pub const DEFAULT_HASH_DIM: usize = 64;

#[derive(Clone, Debug)]
pub struct HashBackend {
    name: String,
    dim: usize,
    seed: u64,
}

impl HashBackend {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim > 0, "hash backend dim must be positive");
        Self {
            name: format!("hash-d{dim}-s{seed}"),
            dim,
            seed,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn token_vector(&self, token: &str, out: &mut [f64]) {
        for (block, chunk) in out.chunks_mut(16).enumerate() {
            let digest = Sha256::digest(format!("{}:{}:{}", self.seed, token, block));
            for (slot, pair) in chunk.iter_mut().zip(digest.chunks_exact(2)) {
                let u = u16::from_be_bytes([pair[0], pair[1]]);
                *slot = f64::from(u) / 32768.0 - 1.0;
            }
        }
    }

    pub fn embed_text(&self, text: &str) -> Embedding {
        let tokens = tokenize(text);
        if tokens.is_empty() {
            return Embedding::zeros(&self.name, self.dim);
        }
        let mut sum = vec![0.0; self.dim];
        let mut tv = vec![0.0; self.dim];
        for t in &tokens {
            self.token_vector(t, &mut tv);
            for (acc, v) in sum.iter_mut().zip(&tv) {
                *acc += v;
            }
        }
        let n = tokens.len() as f64;
        Embedding {
            values: sum.into_iter().map(|s| s / n).collect(),
            backend: self.name.clone(),
        }
    }
}

impl Default for HashBackend {
    fn default() -> Self {
        Self::new(DEFAULT_HASH_DIM, 0)
    }
}

impl EmbeddingBackend for HashBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Embedding>, EmbeddingError> {
        Ok(texts.iter().map(|t| self.embed_text(t)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_seeded() {
        let a = HashBackend::new(20, 7);
        let b = HashBackend::new(20, 7);
        let c = HashBackend::new(20, 8);
        let t = "The CSP shall monitor malware.";
        assert_eq!(a.embed_text(t), b.embed_text(t));
        assert_ne!(a.embed_text(t).values, c.embed_text(t).values);
        assert_eq!(a.name(), "hash-d20-s7");
    }

    #[test]
    fn first_component_matches_digest() {
        let b = HashBackend::new(3, 0);
        let d = Sha256::digest(b"0:abc:0");
        let expect = f64::from(u16::from_be_bytes([d[0], d[1]])) / 32768.0 - 1.0;
        assert_eq!(b.embed_text("ABC.").values[0], expect);
    }

    #[test]
    fn values_in_range_and_empty_text_degenerate() {
        let b = HashBackend::new(40, 1);
        let e = b.embed_text("one two three");
        assert_eq!(e.dim(), 40);
        assert!(e.values.iter().all(|v| (-1.0..1.0).contains(v)));
        assert!(b.embed_text("  ... ").is_degenerate());
    }
}
