//! nDCG@k scoring of ranked lists against the ground truth.
//!
//! Relevance is binary: a metric gains 1 if it is one of the requirement's
//! correct metrics and 0 otherwise. Positional discounting follows
//!
//! ```text
//! DCG_k  = g(r1) + sum_{i=2..k} g(ri) / log2(i)
//! IDCG_k = DCG_k of min(m, k) leading ones, m = number of correct metrics
//! nDCG_k = DCG_k / IDCG_k
//! ```
//!
//! Position 1 is undiscounted and, since `log2(2) = 1`, so is position 2:
//! with a single correct metric, ranking it first or second both score 1.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::corpus::GroundTruth;
use crate::ranking::{Method, RankedList};

pub const DEFAULT_K: usize = 10;

/// Binary relevance of `metric_id`.
pub fn gain(metric_id: &str, relevant: &HashSet<&str>) -> f64 {
    if relevant.contains(metric_id) {
        1.0
    } else {
        0.0
    }
}

fn discount(position: usize) -> f64 {
    if position <= 1 {
        1.0
    } else {
        (position as f64).ln() / std::f64::consts::LN_2
    }
}

/// DCG of the first `k` gains. Missing positions count as zero gain.
pub fn dcg_at_k(gains: &[f64], k: usize) -> f64 {
    gains
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, g)| g / discount(i + 1))
        .sum()
}

/// DCG of an ideal list with `num_relevant` correct metrics on top.
pub fn idcg_at_k(num_relevant: usize, k: usize) -> f64 {
    (1..=num_relevant.min(k)).map(|i| 1.0 / discount(i)).sum()
}

/// nDCG@k of `ranking` given the correct metric ids. Returns 0 when no
/// correct metric is in the top `k` (or when `relevant` is empty).
pub fn ndcg_at_k<'a>(
    ranking: impl IntoIterator<Item = &'a str>,
    relevant: &[String],
    k: usize,
) -> f64 {
    let relevant: HashSet<&str> = relevant.iter().map(String::as_str).collect();
    let gains: Vec<f64> = ranking
        .into_iter()
        .take(k)
        .map(|id| gain(id, &relevant))
        .collect();
    let ideal = idcg_at_k(relevant.len(), k);
    if ideal == 0.0 {
        return 0.0;
    }
    dcg_at_k(&gains, k) / ideal
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("requirement {0:?} has no ground-truth mapping")]
    MissingTruth(String),
    #[error("requirement {0:?} is ranked more than once")]
    DuplicateRequirement(String),
    #[error("k must be at least 1")]
    InvalidK,
    #[error("rankings mix labels: {0}")]
    MixedLabels(String),
}

/// Per-requirement nDCG@k plus both aggregate means.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: Method,
    pub backend: String,
    pub k: usize,
    pub per_requirement: IndexMap<String, f64>,
    /// Mean over requirements with a nonzero score; 0 when there are none
    /// (see `nonzero_mean_defined`).
    pub mean_nonzero: f64,
    /// Mean over all requirements, zeros included.
    pub mean_all: f64,
    pub nonzero_count: usize,
    pub nonzero_mean_defined: bool,
}

impl EvalReport {
    /// Builds a report from already computed per-requirement scores.
    pub fn from_scores(
        method: Method,
        backend: impl Into<String>,
        k: usize,
        per_requirement: IndexMap<String, f64>,
    ) -> Self {
        let n = per_requirement.len();
        let total: f64 = per_requirement.values().sum();
        let nonzero: Vec<f64> = per_requirement
            .values()
            .copied()
            .filter(|&s| s > 0.0)
            .collect();
        let nonzero_total: f64 = nonzero.iter().sum();
        let nonzero_count = nonzero.len();
        Self {
            method,
            backend: backend.into(),
            k,
            per_requirement,
            mean_nonzero: if nonzero_count == 0 {
                0.0
            } else {
                nonzero_total / nonzero_count as f64
            },
            mean_all: if n == 0 { 0.0 } else { total / n as f64 },
            nonzero_count,
            nonzero_mean_defined: nonzero_count > 0,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        fs::write(path, self.to_json() + "\n")
    }
}

/// Scores every ranking against `truth`.
///
/// All rankings must share one method and backend; the report carries them
/// as labels. An empty input yields an empty report labelled cosine.
pub fn evaluate(
    rankings: &[RankedList],
    truth: &GroundTruth,
    k: usize,
) -> Result<EvalReport, EvalError> {
    if k == 0 {
        return Err(EvalError::InvalidK);
    }
    let (method, backend) = rankings
        .first()
        .map(|r| (r.method, r.backend.clone()))
        .unwrap_or((Method::Cosine, String::new()));

    let mut scores = IndexMap::with_capacity(rankings.len());
    for r in rankings {
        if r.method != method || r.backend != backend {
            return Err(EvalError::MixedLabels(format!(
                "{}/{} vs {}/{}",
                method, backend, r.method, r.backend
            )));
        }
        let relevant = truth
            .relevant(&r.requirement)
            .ok_or_else(|| EvalError::MissingTruth(r.requirement.clone()))?;
        let score = ndcg_at_k(r.metric_ids(), relevant, k);
        if scores.insert(r.requirement.clone(), score).is_some() {
            return Err(EvalError::DuplicateRequirement(r.requirement.clone()));
        }
    }
    Ok(EvalReport::from_scores(method, backend, k, scores))
}
