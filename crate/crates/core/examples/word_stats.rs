//! Word-count statistics of the requirement and metric descriptions.
//!
//!     cargo run --example word_stats [corpus.json]

use std::error::Error;
use std::path::PathBuf;

use reqmatch::corpus::{load_corpus, word_count_stats, WordStats};

fn default_corpus() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/corpus.json")
}

fn print(label: &str, s: &WordStats) {
    println!("{label}: {} descriptions, {} words, mean {:.2}", s.n, s.total_words, s.mean);
    for (words, count) in &s.histogram {
        println!("  {words:>3} words  {}", "#".repeat(*count));
    }
}

pub fn run_example(corpus: Option<PathBuf>) -> Result<(WordStats, WordStats), Box<dyn Error>> {
    let corpus = load_corpus(corpus.unwrap_or_else(default_corpus))?;
    let (reqs, metrics) = word_count_stats(&corpus);
    print("requirements", &reqs);
    print("metrics", &metrics);
    Ok((reqs, metrics))
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example(std::env::args_os().nth(1).map(PathBuf::from)).map(|_| ())
}
