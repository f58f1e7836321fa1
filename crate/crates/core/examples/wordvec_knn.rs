//! Baseline: averaged word vectors, exact Euclidean kNN through a K-d tree.
//!
//!     cargo run --example wordvec_knn [vectors.vec]

use std::error::Error;
use std::path::PathBuf;

use reqmatch::embedding::{load_word_vectors, WordVecBackend};
use reqmatch::preprocess::Stopwords;
use reqmatch::{evaluate, load_corpus, rank_all, Method, RankOptions, RankedList};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn run_example(vectors: Option<PathBuf>) -> Result<Vec<RankedList>, Box<dyn Error>> {
    let corpus = load_corpus(fixture("corpus.json"))?;
    let table = load_word_vectors(vectors.unwrap_or_else(|| fixture("wordvec_small.vec")), None)?;
    println!("{} word vectors of dimension {}", table.len(), table.dim());
    let backend = WordVecBackend::new("wordvec-small", table, Stopwords::english());

    let opts = RankOptions {
        method: Method::EuclideanKnn,
        k: 5,
        ..RankOptions::default()
    };
    let rankings = rank_all(&corpus, &backend, opts)?;
    for r in &rankings {
        let top: Vec<String> = r
            .entries
            .iter()
            .map(|e| format!("{} ({:.3})", e.metric, e.score))
            .collect();
        println!("{:<10} {}", r.requirement, top.join(", "));
    }
    let report = evaluate(&rankings, &corpus.ground_truth, 10)?;
    println!(
        "mean nDCG@10 {:.4} over {} nonzero requirements",
        report.mean_nonzero, report.nonzero_count
    );
    Ok(rankings)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example(std::env::args_os().nth(1).map(PathBuf::from)).map(|_| ())
}
