//! Automatic association of natural-language security requirements with
//! quantifiable metrics.
//!
//! Requirement and metric descriptions are embedded by an
//! [`EmbeddingBackend`](embedding::EmbeddingBackend), metrics are ranked per
//! requirement (cosine similarity, or exact Euclidean kNN through a k-d tree
//! for the averaged word-vector baseline), and rankings are scored against
//! an expert mapping with nDCG@10.
//!
//! ```
//! use reqmatch::evaluation::ndcg_at_k;
//!
//! let relevant = vec!["a".to_string(), "b".to_string()];
//! let score = ndcg_at_k(["a", "x", "y", "b"], &relevant, 10);
//! assert!((score - 0.75).abs() < 1e-12);
//! ```

pub mod cli;
pub mod corpus;
pub mod embedding;
pub mod evaluation;
pub mod preprocess;
pub mod ranking;
pub mod report;

pub use corpus::{load_corpus, Corpus, GroundTruth, Metric, Requirement};
pub use embedding::{Embedding, EmbeddingBackend};
pub use evaluation::{evaluate, ndcg_at_k, EvalReport};
pub use ranking::{rank_all, Method, RankOptions, RankedList};
pub use report::{compare, Comparison};
