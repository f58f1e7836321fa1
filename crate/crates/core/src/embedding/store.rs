//! Content-addressed embedding store in JSON Lines.
//!
//! Each line is `{"key":hex,"backend":str,"dim":int,"values":[floats]}` where
//! `key` is the SHA-256 of the UTF-8 text. Entries are identified by
//! `(backend, key)`, so an edited description never picks up a stale vector.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Embedding, EmbeddingBackend, EmbeddingError};

/// Hex SHA-256 of the UTF-8 bytes of `text`.
pub fn store_key(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("embedding store {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("embedding store line {line}: corrupt record: {message}")]
    Corrupt { line: usize, message: String },
    #[error("embedding store line {line}: duplicate key {key} for backend {backend}")]
    DuplicateKey {
        line: usize,
        key: String,
        backend: String,
    },
    #[error("embedding store line {line}: backend {backend} has dim {found}, earlier records have {expected}")]
    DimInconsistent {
        line: usize,
        backend: String,
        expected: usize,
        found: usize,
    },
    #[error("embedding store has no records for backend {0}")]
    UnknownBackend(String),
    #[error("embedding store holds several backends ({0}); pick one explicitly")]
    AmbiguousBackend(String),
}

#[derive(Serialize, Deserialize)]
struct Record {
    key: String,
    backend: String,
    dim: usize,
    values: Vec<f64>,
}

/// In-memory view of a store file, in file order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EmbeddingStore {
    entries: IndexMap<(String, String), Embedding>,
    dims: HashMap<String, usize>,
}

impl EmbeddingStore {
    pub fn new() -> Self {
        Self::default()
    }

    fn insert_at(&mut self, line: usize, key: String, e: Embedding) -> Result<(), StoreError> {
        if key.len() != 64 || !key.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(StoreError::Corrupt {
                line,
                message: format!("key {key:?} is not a SHA-256 hex digest"),
            });
        }
        if let Some(&expected) = self.dims.get(&e.backend) {
            if expected != e.dim() {
                return Err(StoreError::DimInconsistent {
                    line,
                    found: e.dim(),
                    backend: e.backend,
                    expected,
                });
            }
        }
        let id = (e.backend.clone(), key);
        if self.entries.contains_key(&id) {
            return Err(StoreError::DuplicateKey {
                line,
                key: id.1,
                backend: id.0,
            });
        }
        self.dims.insert(e.backend.clone(), e.dim());
        self.entries.insert(id, e);
        Ok(())
    }

    /// Adds an embedding under an explicit key, which must look like a
    /// [`store_key`] digest.
    pub fn insert(&mut self, key: String, e: Embedding) -> Result<(), StoreError> {
        let line = self.entries.len() + 1;
        self.insert_at(line, key, e)
    }

    /// Adds the embedding of `text`, keyed by its content hash.
    pub fn insert_text(&mut self, text: &str, e: Embedding) -> Result<(), StoreError> {
        self.insert(store_key(text), e)
    }

    pub fn get(&self, backend: &str, key: &str) -> Option<&Embedding> {
        self.entries.get(&(backend.to_owned(), key.to_owned()))
    }

    pub fn get_text(&self, backend: &str, text: &str) -> Option<&Embedding> {
        self.get(backend, &store_key(text))
    }

    pub fn contains_text(&self, backend: &str, text: &str) -> bool {
        self.get_text(backend, text).is_some()
    }

    pub fn dim_of(&self, backend: &str) -> Option<usize> {
        self.dims.get(backend).copied()
    }

    /// Backend names in first-seen order.
    pub fn backends(&self) -> Vec<String> {
        let mut seen = Vec::<String>::new();
        for (b, _) in self.entries.keys() {
            if !seen.contains(b) {
                seen.push(b.clone());
            }
        }
        seen
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(key, embedding)` pairs in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &Embedding)> {
        self.entries.iter().map(|((_, k), e)| (k.as_str(), e))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), StoreError> {
        let pairs: Vec<(String, Embedding)> =
            self.iter().map(|(k, e)| (k.to_owned(), e.clone())).collect();
        store_save(&pairs, path)
    }
}

/// Writes `(key, embedding)` pairs as JSON Lines. Keys must be unique per
/// backend and dims consistent per backend; nothing is written otherwise.
pub fn store_save(pairs: &[(String, Embedding)], path: impl AsRef<Path>) -> Result<(), StoreError> {
    let path = path.as_ref();
    let mut check = EmbeddingStore::new();
    for (key, e) in pairs {
        check.insert(key.clone(), e.clone())?;
    }

    let io_err = |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err)?;
    }
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    for (key, e) in pairs {
        let rec = Record {
            key: key.clone(),
            backend: e.backend.clone(),
            dim: e.dim(),
            values: e.values.clone(),
        };
        serde_json::to_writer(&mut out, &rec).expect("store record serializes");
        out.write_all(b"\n").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

pub fn store_load(path: impl AsRef<Path>) -> Result<EmbeddingStore, StoreError> {
    let path = path.as_ref();
    let io_err = |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut store = EmbeddingStore::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(&line).map_err(|e| StoreError::Corrupt {
            line: line_no,
            message: e.to_string(),
        })?;
        if rec.dim != rec.values.len() {
            return Err(StoreError::Corrupt {
                line: line_no,
                message: format!("declared dim {} but {} values", rec.dim, rec.values.len()),
            });
        }
        let e = Embedding::new(rec.backend, rec.values).map_err(|e| StoreError::Corrupt {
            line: line_no,
            message: e.to_string(),
        })?;
        store.insert_at(line_no, rec.key, e)?;
    }
    Ok(store)
}

/// Serves embeddings for one backend name out of a loaded store.
#[derive(Clone, Debug)]
pub struct StoreBackend {
    name: String,
    dim: usize,
    store: Arc<EmbeddingStore>,
}

impl StoreBackend {
    /// Uses `backend` if given, otherwise the store's only backend.
    pub fn new(store: Arc<EmbeddingStore>, backend: Option<&str>) -> Result<Self, StoreError> {
        let name = match backend {
            Some(b) => b.to_owned(),
            None => {
                let all = store.backends();
                match all.len() {
                    1 => all[0].clone(),
                    0 => return Err(StoreError::UnknownBackend("<any>".into())),
                    _ => return Err(StoreError::AmbiguousBackend(all.join(", "))),
                }
            }
        };
        let dim = store
            .dim_of(&name)
            .ok_or_else(|| StoreError::UnknownBackend(name.clone()))?;
        Ok(Self { name, dim, store })
    }
}

impl EmbeddingBackend for StoreBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Embedding>, EmbeddingError> {
        let mut out = Vec::with_capacity(texts.len());
        let mut missing = Vec::new();
        for t in texts {
            let key = store_key(t);
            match self.store.get(&self.name, &key) {
                Some(e) => out.push(e.clone()),
                None => {
                    if !missing.contains(&key) {
                        missing.push(key)
                    }
                }
            }
        }
        if !missing.is_empty() {
            return Err(EmbeddingError::MissingFromStore {
                backend: self.name.clone(),
                keys: missing,
            });
        }
        Ok(out)
    }
}
