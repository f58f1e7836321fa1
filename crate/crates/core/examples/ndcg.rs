//! nDCG@k of hand-made rankings, and aggregation over requirements.
//!
//!     cargo run --example ndcg

use indexmap::IndexMap;
use reqmatch::evaluation::{ndcg_at_k, EvalReport};
use reqmatch::Method;

pub fn run_example() -> EvalReport {
    let relevant = ["a".to_string(), "b".to_string()];
    let cases: [(&str, &[&str]); 4] = [
        ("ideal", &["a", "b", "x", "y"]),
        ("swapped", &["b", "a", "x", "y"]),
        ("second at 4", &["a", "x", "y", "b"]),
        ("missed", &["x", "y", "z"]),
    ];
    let mut per = IndexMap::new();
    for (name, ranking) in cases {
        let s = ndcg_at_k(ranking.iter().copied(), &relevant, 10);
        println!("{name:<12} {ranking:?} -> {s:.4}");
        per.insert(name.to_string(), s);
    }
    let report = EvalReport::from_scores(Method::Cosine, "hand", 10, per);
    println!(
        "mean over nonzero {:.4} ({} of {}), mean over all {:.4}",
        report.mean_nonzero,
        report.nonzero_count,
        report.per_requirement.len(),
        report.mean_all
    );
    report
}

#[allow(dead_code)]
fn main() {
    run_example();
}
