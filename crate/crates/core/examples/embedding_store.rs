//! Persisting embeddings and ranking from the store alone.
//!
//!     cargo run --example embedding_store [store.jsonl]

use std::error::Error;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use reqmatch::embedding::{store_key, store_load, store_save, HashBackend, StoreBackend};
use reqmatch::{load_corpus, rank_all, EmbeddingBackend, RankOptions};

pub fn run_example(store_path: &Path) -> Result<usize, Box<dyn Error>> {
    let corpus = load_corpus(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/corpus.json"))?;
    let hash = HashBackend::default();

    let texts: Vec<&str> = corpus
        .requirements
        .iter()
        .map(|r| r.description.as_str())
        .chain(corpus.metrics.iter().map(|m| m.description.as_str()))
        .collect();
    let pairs: Vec<(String, _)> = texts
        .iter()
        .zip(hash.embed_batch(&texts)?)
        .map(|(t, e)| (store_key(t), e))
        .collect();
    store_save(&pairs, store_path)?;

    let store = Arc::new(store_load(store_path)?);
    println!("{}: {} embeddings for {:?}", store_path.display(), store.len(), store.backends());
    let from_store = StoreBackend::new(store, None)?;
    let direct = rank_all(&corpus, &hash, RankOptions::default())?;
    let stored = rank_all(&corpus, &from_store, RankOptions::default())?;
    assert_eq!(direct, stored, "stored vectors round-trip bit for bit");
    println!("rankings from the store match the live backend");
    Ok(store_load(store_path)?.len())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    let path = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("reqmatch-example-store.jsonl"));
    run_example(&path).map(|_| ())
}
