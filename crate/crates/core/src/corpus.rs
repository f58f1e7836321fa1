//! Requirement / metric corpus: loading, validation and word-count statistics.
//!
//! The on-disk format is a single JSON document with three arrays:
//! `requirements`, `metrics` and `mappings`. Record field names follow the
//! exported deliverable (`description`, `type`, `category`,
//! `targetResourceType`). Fields the engine does not know about are kept in
//! `extra` and written back unchanged by [`save_corpus`].

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// A natural-language security requirement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Requirement {
    pub id: String,
    pub description: String,
    #[serde(rename = "type", default)]
    pub req_type: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

/// A quantifiable metric that can be attached to requirements.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub id: String,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(
        rename = "targetResourceType",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub target_resource_type: Option<String>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

/// One row of the `mappings` array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mapping {
    pub requirement: String,
    pub metrics: Vec<String>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

/// Requirement id to the set of metric ids an expert marked as correct.
///
/// Iteration order is the order of the `mappings` array in the corpus file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GroundTruth {
    mapping: IndexMap<String, Vec<String>>,
}

impl GroundTruth {
    /// Builds a ground truth from `(requirement, metrics)` pairs without
    /// checking them against a corpus. Duplicate metric ids within a set are
    /// collapsed.
    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, Vec<S>)>,
        S: Into<String>,
    {
        let mut mapping = IndexMap::new();
        for (req, metrics) in pairs {
            let mut seen = HashSet::new();
            let metrics: Vec<String> = metrics
                .into_iter()
                .map(Into::into)
                .filter(|m: &String| seen.insert(m.clone()))
                .collect();
            mapping.insert(req.into(), metrics);
        }
        Self { mapping }
    }

    pub fn relevant(&self, requirement_id: &str) -> Option<&[String]> {
        self.mapping.get(requirement_id).map(Vec::as_slice)
    }

    pub fn contains(&self, requirement_id: &str) -> bool {
        self.mapping.contains_key(requirement_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.mapping.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }
}

/// A validated corpus. Immutable once loaded.
#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    pub requirements: Vec<Requirement>,
    pub metrics: Vec<Metric>,
    pub ground_truth: GroundTruth,
    mappings: Vec<Mapping>,
    extra: Map<String, Value>,
}

#[derive(Serialize, Deserialize)]
struct CorpusFile {
    requirements: Vec<Requirement>,
    metrics: Vec<Metric>,
    #[serde(default)]
    mappings: Vec<Mapping>,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

/// Which array of the corpus file a record came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Collection {
    Requirements,
    Metrics,
    Mappings,
}

impl fmt::Display for Collection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Collection::Requirements => "requirements",
            Collection::Metrics => "metrics",
            Collection::Mappings => "mappings",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read corpus {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus {path} is not valid JSON for the corpus schema (line {line}, column {column}): {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{collection}[{index}]: empty id")]
    EmptyId { collection: Collection, index: usize },
    #[error("{collection}[{index}]: duplicate id {id:?}")]
    DuplicateId {
        collection: Collection,
        index: usize,
        id: String,
    },
    #[error("{collection}[{index}] ({id:?}): description is empty")]
    EmptyDescription {
        collection: Collection,
        index: usize,
        id: String,
    },
    #[error("mappings[{index}]: dangling {target} reference {id:?}")]
    DanglingReference {
        index: usize,
        target: Collection,
        id: String,
    },
    #[error("mappings[{index}] ({requirement:?}): metric set is empty")]
    EmptyMapping { index: usize, requirement: String },
    #[error("mappings[{index}]: requirement {requirement:?} is mapped more than once")]
    DuplicateMapping { index: usize, requirement: String },
}

impl Corpus {
    /// Validates the three collections and assembles a corpus.
    pub fn new(
        requirements: Vec<Requirement>,
        metrics: Vec<Metric>,
        mappings: Vec<Mapping>,
    ) -> Result<Self, CorpusError> {
        Self::from_file(CorpusFile {
            requirements,
            metrics,
            mappings,
            extra: Map::new(),
        })
    }

    fn from_file(file: CorpusFile) -> Result<Self, CorpusError> {
        let req_ids = check_records(
            Collection::Requirements,
            file.requirements.iter().map(|r| (&r.id, &r.description)),
        )?;
        let metric_ids = check_records(
            Collection::Metrics,
            file.metrics.iter().map(|m| (&m.id, &m.description)),
        )?;

        let mut mapped = HashSet::new();
        for (index, m) in file.mappings.iter().enumerate() {
            if !req_ids.contains(m.requirement.as_str()) {
                return Err(CorpusError::DanglingReference {
                    index,
                    target: Collection::Requirements,
                    id: m.requirement.clone(),
                });
            }
            if !mapped.insert(m.requirement.as_str()) {
                return Err(CorpusError::DuplicateMapping {
                    index,
                    requirement: m.requirement.clone(),
                });
            }
            if m.metrics.is_empty() {
                return Err(CorpusError::EmptyMapping {
                    index,
                    requirement: m.requirement.clone(),
                });
            }
            if let Some(missing) = m
                .metrics
                .iter()
                .find(|id| !metric_ids.contains(id.as_str()))
            {
                return Err(CorpusError::DanglingReference {
                    index,
                    target: Collection::Metrics,
                    id: missing.clone(),
                });
            }
        }

        let ground_truth = GroundTruth::from_pairs(
            file.mappings
                .iter()
                .map(|m| (m.requirement.clone(), m.metrics.clone())),
        );
        Ok(Self {
            requirements: file.requirements,
            metrics: file.metrics,
            ground_truth,
            mappings: file.mappings,
            extra: file.extra,
        })
    }

    pub fn requirement(&self, id: &str) -> Option<&Requirement> {
        self.requirements.iter().find(|r| r.id == id)
    }

    pub fn metric(&self, id: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.id == id)
    }

    /// Serializes the corpus back into the file schema.
    pub fn to_json(&self) -> String {
        let file = CorpusFile {
            requirements: self.requirements.clone(),
            metrics: self.metrics.clone(),
            mappings: self.mappings.clone(),
            extra: self.extra.clone(),
        };
        serde_json::to_string_pretty(&file).expect("corpus serialization cannot fail")
    }
}

fn check_records<'a>(
    collection: Collection,
    records: impl Iterator<Item = (&'a String, &'a String)>,
) -> Result<HashSet<&'a str>, CorpusError> {
    let mut ids = HashSet::new();
    for (index, (id, description)) in records.enumerate() {
        if id.trim().is_empty() {
            return Err(CorpusError::EmptyId { collection, index });
        }
        if !ids.insert(id.as_str()) {
            return Err(CorpusError::DuplicateId {
                collection,
                index,
                id: id.clone(),
            });
        }
        if description.trim().is_empty() {
            return Err(CorpusError::EmptyDescription {
                collection,
                index,
                id: id.clone(),
            });
        }
    }
    Ok(ids)
}

/// Parses and validates a corpus from a JSON string. `origin` only labels
/// diagnostics.
pub fn parse_corpus(json: &str, origin: &Path) -> Result<Corpus, CorpusError> {
    let file: CorpusFile = serde_json::from_str(json).map_err(|e| CorpusError::Parse {
        path: origin.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Corpus::from_file(file)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_corpus(&text, path)
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> std::io::Result<()> {
    fs::write(path, corpus.to_json() + "\n")
}

/// Word-count distribution for one collection of descriptions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WordStats {
    /// word count -> number of descriptions with that count
    pub histogram: BTreeMap<usize, usize>,
    pub mean: f64,
    pub n: usize,
    pub total_words: usize,
}

impl WordStats {
    pub fn from_texts<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut histogram = BTreeMap::new();
        let mut n = 0;
        let mut total_words = 0;
        for text in texts {
            let words = text.split_whitespace().count();
            *histogram.entry(words).or_insert(0) += 1;
            total_words += words;
            n += 1;
        }
        let mean = if n == 0 {
            0.0
        } else {
            total_words as f64 / n as f64
        };
        Self {
            histogram,
            mean,
            n,
            total_words,
        }
    }
}

/// Word counts of the raw descriptions, split on Unicode whitespace.
/// Returns `(requirements, metrics)`.
pub fn word_count_stats(corpus: &Corpus) -> (WordStats, WordStats) {
    (
        WordStats::from_texts(corpus.requirements.iter().map(|r| r.description.as_str())),
        WordStats::from_texts(corpus.metrics.iter().map(|m| m.description.as_str())),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus_json(mappings: &str) -> String {
        format!(
            r#"{{
  "requirements": [
    {{"id": "OPS-05.3", "description": "The CSP shall monitor malware.", "type": "Organizational", "category": "Operational security"}},
    {{"id": "IAM-01.1", "description": "Access shall be reviewed.", "type": "Technical"}}
  ],
  "metrics": [
    {{"id": "MalwareProtectionEnabled", "description": "Antimalware is enabled.", "targetResourceType": "VirtualMachine", "owner": "wp2"}},
    {{"id": "AccessReviewed", "description": "Access reviews happen."}}
  ],
  "mappings": {mappings}
}}"#
        )
    }

    fn parse(json: &str) -> Result<Corpus, CorpusError> {
        parse_corpus(json, Path::new("test.json"))
    }

    #[test]
    fn loads_valid_corpus() {
        let c = parse(&corpus_json(
            r#"[{"requirement": "OPS-05.3", "metrics": ["MalwareProtectionEnabled", "AccessReviewed"]},
                {"requirement": "IAM-01.1", "metrics": ["AccessReviewed"]}]"#,
        ))
        .unwrap();
        assert_eq!(c.requirements.len(), 2);
        assert_eq!(c.metrics.len(), 2);
        assert_eq!(c.ground_truth.len(), 2);
        assert_eq!(c.ground_truth.relevant("OPS-05.3").unwrap().len(), 2);
        assert_eq!(c.requirements[0].req_type, "Organizational");
        assert_eq!(
            c.metrics[0].target_resource_type.as_deref(),
            Some("VirtualMachine")
        );
        assert_eq!(c.metrics[0].extra["owner"], "wp2");
    }

    #[test]
    fn dangling_metric_reference_names_the_id() {
        let err = parse(&corpus_json(
            r#"[{"requirement": "OPS-05.3", "metrics": ["X"]}]"#,
        ))
        .unwrap_err();
        match &err {
            CorpusError::DanglingReference { id, target, .. } => {
                assert_eq!(id, "X");
                assert_eq!(*target, Collection::Metrics);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("\"X\""));
    }

    #[test]
    fn dangling_requirement_reference() {
        let err = parse(&corpus_json(r#"[{"requirement": "NOPE", "metrics": ["AccessReviewed"]}]"#))
            .unwrap_err();
        assert!(matches!(
            err,
            CorpusError::DanglingReference {
                target: Collection::Requirements,
                ..
            }
        ));
    }

    #[test]
    fn empty_mapping_rejected() {
        let err = parse(&corpus_json(r#"[{"requirement": "OPS-05.3", "metrics": []}]"#)).unwrap_err();
        assert!(matches!(err, CorpusError::EmptyMapping { index: 0, .. }));
    }

    #[test]
    fn duplicate_ids_rejected_with_location() {
        let json = r#"{"requirements": [
            {"id": "A", "description": "x", "type": "t"},
            {"id": "A", "description": "y", "type": "t"}],
            "metrics": [], "mappings": []}"#;
        let err = parse(json).unwrap_err();
        assert!(matches!(
            err,
            CorpusError::DuplicateId {
                collection: Collection::Requirements,
                index: 1,
                ..
            }
        ));
        assert_eq!(err.to_string(), "requirements[1]: duplicate id \"A\"");
    }

    #[test]
    fn blank_description_rejected() {
        let json = r#"{"requirements": [], "metrics": [{"id": "m", "description": "  \n"}], "mappings": []}"#;
        assert!(matches!(
            parse(json).unwrap_err(),
            CorpusError::EmptyDescription {
                collection: Collection::Metrics,
                index: 0,
                ..
            }
        ));
    }

    #[test]
    fn parse_error_carries_position() {
        let err = parse("{\n  \"requirements\": [,]\n}").unwrap_err();
        match err {
            CorpusError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_corpus("/definitely/not/here.json").unwrap_err(),
            CorpusError::Io { .. }
        ));
    }

    #[test]
    fn save_then_load_round_trips() {
        let c = parse(&corpus_json(
            r#"[{"requirement": "IAM-01.1", "metrics": ["AccessReviewed"], "note": "kept"}]"#,
        ))
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        save_corpus(&c, &path).unwrap();
        let back = load_corpus(&path).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_json(), c.to_json());
    }

    #[test]
    fn word_stats_small_example() {
        let s = WordStats::from_texts(["a b c", "a b"]);
        assert_eq!(s.mean, 2.5);
        assert_eq!(s.n, 2);
        assert_eq!(s.histogram, BTreeMap::from([(2, 1), (3, 1)]));
        assert_eq!(s.total_words, 5);
    }

    #[test]
    fn word_stats_split_on_unicode_whitespace() {
        let s = WordStats::from_texts(["a\u{00a0}b\u{2003}c\td"]);
        assert_eq!(s.histogram, BTreeMap::from([(4, 1)]));
    }
}
