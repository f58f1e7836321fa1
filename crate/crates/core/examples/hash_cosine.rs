//! Cosine ranking of every metric against each requirement, using the
//! deterministic hash backend (no model files needed).
//!
//!     cargo run --example hash_cosine

use std::error::Error;
use std::path::PathBuf;

use reqmatch::embedding::HashBackend;
use reqmatch::{load_corpus, rank_all, EmbeddingBackend, RankOptions, RankedList};

pub fn run_example() -> Result<Vec<RankedList>, Box<dyn Error>> {
    let corpus = load_corpus(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/corpus.json"))?;
    let backend = HashBackend::default();
    println!("backend {} (dim {})", backend.name(), backend.dim());
    let rankings = rank_all(&corpus, &backend, RankOptions::default())?;
    for r in &rankings {
        let relevant = corpus.ground_truth.relevant(&r.requirement).unwrap_or_default();
        println!("{}", r.requirement);
        for (pos, e) in r.entries.iter().take(3).enumerate() {
            let mark = if relevant.contains(&e.metric) { "*" } else { " " };
            println!("  {}. {mark} {:<12} {:+.4}", pos + 1, e.metric, e.score);
        }
    }
    Ok(rankings)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example().map(|_| ())
}
