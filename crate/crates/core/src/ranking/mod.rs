//! Ranking metrics for each requirement.
//!
//! Two methods are supported: cosine similarity over all metrics (used with
//! sentence embeddings) and exact Euclidean k-nearest-neighbour search in a
//! k-d tree (the averaged word-vector baseline). Both break ties by
//! ascending metric id, so identical inputs always give identical lists.

mod kdtree;

pub use kdtree::{build_kdtree, euclidean_distance, knn_query, KdTree};

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::embedding::{l2_normalize, store_key, Embedding, EmbeddingBackend, EmbeddingError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "cosine")]
    Cosine,
    #[serde(rename = "euclidean-knn")]
    EuclideanKnn,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Cosine => "cosine",
            Method::EuclideanKnn => "euclidean-knn",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cosine" => Ok(Method::Cosine),
            "knn" | "euclidean-knn" => Ok(Method::EuclideanKnn),
            other => Err(format!("unknown ranking method {other:?} (cosine|knn)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub metric: String,
    /// Cosine similarity, or Euclidean distance for kNN.
    pub score: f64,
}

/// All (cosine) or the top-k (kNN) metrics for one requirement, best first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub requirement: String,
    pub method: Method,
    pub backend: String,
    #[serde(rename = "ranking")]
    pub entries: Vec<RankEntry>,
}

impl RankedList {
    pub fn metric_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.metric.as_str())
    }

    /// One JSON Lines record.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("ranked list serializes")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RankError {
    #[error("{context}: dimension {found} does not match {expected}")]
    DimMismatch {
        context: String,
        expected: usize,
        found: usize,
    },
    #[error("no metrics to rank")]
    NoMetrics,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("metric id {0:?} appears more than once")]
    DuplicateMetric(String),
    #[error("embedding {context} with backend {backend}: {source}")]
    Embedding {
        context: String,
        backend: String,
        #[source]
        source: EmbeddingError,
    },
    #[error("embeddings missing for {} text(s): {}", .0.len(), fmt_missing(.0))]
    MissingEmbeddings(Vec<MissingText>),
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

/// A corpus text whose embedding was not found in a store.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MissingText {
    /// `requirement:<id>` or `metric:<id>`
    pub record: String,
    pub key: String,
}

fn fmt_missing(items: &[MissingText]) -> String {
    items
        .iter()
        .map(|m| format!("{} (key {})", m.record, m.key))
        .collect::<Vec<_>>()
        .join(", ")
}

impl RankError {
    pub fn is_network(&self) -> bool {
        matches!(self, RankError::Embedding { source, .. } if source.is_network())
    }
}

/// `a·b / (‖a‖‖b‖)`, clamped to `[-1, 1]`; 0 when either side is the zero
/// vector.
pub fn cosine_similarity(a: &Embedding, b: &Embedding) -> Result<f64, RankError> {
    if a.dim() != b.dim() {
        return Err(RankError::DimMismatch {
            context: "cosine similarity".into(),
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    let denom = a.norm() * b.norm();
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / denom).clamp(-1.0, 1.0))
}

fn by_score_desc(a: &RankEntry, b: &RankEntry) -> Ordering {
    b.score
        .partial_cmp(&a.score)
        .expect("scores are finite")
        .then_with(|| a.metric.cmp(&b.metric))
}

/// Every metric ordered by descending cosine similarity to `query`.
pub fn rank_by_cosine(
    requirement_id: &str,
    query: &Embedding,
    metrics: &[(String, Embedding)],
) -> Result<RankedList, RankError> {
    if metrics.is_empty() {
        return Err(RankError::NoMetrics);
    }
    let mut entries = metrics
        .iter()
        .map(|(id, e)| {
            cosine_similarity(query, e).map(|score| RankEntry {
                metric: id.clone(),
                score,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    entries.sort_by(by_score_desc);
    if let Some(w) = entries.windows(2).find(|w| w[0].metric == w[1].metric) {
        return Err(RankError::DuplicateMetric(w[0].metric.clone()));
    }
    Ok(RankedList {
        requirement: requirement_id.to_owned(),
        method: Method::Cosine,
        backend: query.backend.clone(),
        entries,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RankOptions {
    pub method: Method,
    /// List length for kNN. Cosine always ranks every metric.
    pub k: usize,
    /// Scale every embedding to unit length before ranking.
    pub normalize: bool,
    pub parallelism: usize,
}

impl Default for RankOptions {
    fn default() -> Self {
        Self {
            method: Method::Cosine,
            k: 10,
            normalize: false,
            parallelism: 1,
        }
    }
}

fn embed_records(
    backend: &dyn EmbeddingBackend,
    kind: &str,
    records: &[(&str, &str)],
) -> Result<Vec<Embedding>, RankError> {
    let texts: Vec<&str> = records.iter().map(|(_, t)| *t).collect();
    let out = backend.embed_batch(&texts).map_err(|source| match source {
        EmbeddingError::MissingFromStore { keys, .. } => RankError::MissingEmbeddings(
            records
                .iter()
                .filter_map(|(id, text)| {
                    let key = store_key(text);
                    keys.contains(&key).then(|| MissingText {
                        record: format!("{kind}:{id}"),
                        key,
                    })
                })
                .collect(),
        ),
        source => RankError::Embedding {
            context: format!("{kind} descriptions"),
            backend: backend.name().to_owned(),
            source,
        },
    })?;
    for ((id, _), e) in records.iter().zip(&out) {
        if e.dim() != backend.dim() {
            return Err(RankError::DimMismatch {
                context: format!("{kind} {id}"),
                expected: backend.dim(),
                found: e.dim(),
            });
        }
    }
    Ok(out)
}

/// Ranks metrics for every requirement of `corpus`, in corpus order.
pub fn rank_all(
    corpus: &Corpus,
    backend: &dyn EmbeddingBackend,
    opts: RankOptions,
) -> Result<Vec<RankedList>, RankError> {
    if opts.k == 0 {
        return Err(RankError::InvalidK);
    }
    if corpus.metrics.is_empty() {
        return Err(RankError::NoMetrics);
    }
    let metric_records: Vec<(&str, &str)> = corpus
        .metrics
        .iter()
        .map(|m| (m.id.as_str(), m.description.as_str()))
        .collect();
    let req_records: Vec<(&str, &str)> = corpus
        .requirements
        .iter()
        .map(|r| (r.id.as_str(), r.description.as_str()))
        .collect();

    // look up both sides before failing so a store reports every gap at once
    let metric_vecs = embed_records(backend, "metric", &metric_records);
    let req_vecs = embed_records(backend, "requirement", &req_records);
    let (metric_vecs, req_vecs) = match (metric_vecs, req_vecs) {
        (Err(RankError::MissingEmbeddings(mut a)), Err(RankError::MissingEmbeddings(b))) => {
            a.extend(b);
            return Err(RankError::MissingEmbeddings(a));
        }
        (m, r) => (m?, r?),
    };

    let prep = |e: Embedding| if opts.normalize { l2_normalize(&e) } else { e };
    let metrics: Vec<(String, Embedding)> = metric_records
        .iter()
        .zip(metric_vecs)
        .map(|((id, _), e)| (id.to_string(), prep(e)))
        .collect();
    let queries: Vec<(&str, Embedding)> = req_records
        .iter()
        .zip(req_vecs)
        .map(|((id, _), e)| (*id, prep(e)))
        .collect();

    let tree = match opts.method {
        Method::EuclideanKnn => Some(KdTree::build(&metrics)?),
        Method::Cosine => None,
    };
    let rank_one = |(id, q): &(&str, Embedding)| match &tree {
        Some(t) => t.knn_query(id, q, opts.k),
        None => rank_by_cosine(id, q, &metrics),
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.parallelism.max(1))
        .build()
        .map_err(|e| RankError::Pool(e.to_string()))?;
    let mut lists = pool.install(|| {
        queries
            .par_iter()
            .map(rank_one)
            .collect::<Result<Vec<_>, _>>()
    })?;
    for l in &mut lists {
        l.backend = backend.name().to_owned();
    }
    Ok(lists)
}
