//! Evaluates several backend/method combinations and renders the comparison
//! table and plot data.
//!
//!     cargo run --example compare_backends [out-dir]

use std::error::Error;
use std::path::{Path, PathBuf};

use reqmatch::embedding::{load_word_vectors, HashBackend, WordVecBackend};
use reqmatch::preprocess::Stopwords;
use reqmatch::report::{emit, Aggregation, Format};
use reqmatch::{compare, evaluate, load_corpus, rank_all, Comparison, EmbeddingBackend, Method, RankOptions};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn run_example(out: Option<&Path>) -> Result<Comparison, Box<dyn Error>> {
    let corpus = load_corpus(fixture("corpus.json"))?;
    let wordvec = WordVecBackend::new(
        "wordvec-small",
        load_word_vectors(fixture("wordvec_small.vec"), None)?,
        Stopwords::english(),
    );
    let hash = HashBackend::default();
    let backends: [&dyn EmbeddingBackend; 2] = [&wordvec, &hash];

    let mut reports = Vec::new();
    for backend in backends {
        for method in [Method::Cosine, Method::EuclideanKnn] {
            let opts = RankOptions {
                method,
                ..RankOptions::default()
            };
            let rankings = rank_all(&corpus, backend, opts)?;
            reports.push(evaluate(&rankings, &corpus.ground_truth, 10)?);
        }
    }
    let comparison = compare(&reports, Some("wordvec-small/euclidean-knn"))?;
    print!("{}", comparison.render(Format::Csv));
    println!();
    print!("{}", comparison.render(Format::PlotData(Aggregation::NonZero)));
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        emit(&comparison, Format::Json, dir.join("comparison.json"))?;
        emit(&comparison, Format::Csv, dir.join("comparison.csv"))?;
        println!("written to {}", dir.display());
    }
    Ok(comparison)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    let out = std::env::args_os().nth(1).map(PathBuf::from);
    run_example(out.as_deref()).map(|_| ())
}
