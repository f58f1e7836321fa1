//! Text cleaning for the word-vector baseline.
//!
//! Sentence-embedding backends receive raw descriptions; only the averaged
//! word-vector path runs text through [`tokenize`] and [`remove_stopwords`].

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use unicode_normalization::UnicodeNormalization;

/// The stopword list shipped with the crate (`data/stopwords_en.txt`).
pub const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

/// A set of lowercase tokens removed before feature extraction.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    /// Parses the line-oriented stopword format: one token per line, blank
    /// lines and `#` comments ignored.
    pub fn parse(text: &str) -> Self {
        Self(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(normalize)
                .collect(),
        )
    }

    pub fn english() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, StopwordsError> {
        let path = path.as_ref();
        fs::read_to_string(path)
            .map(|t| Self::parse(&t))
            .map_err(|source| StopwordsError {
                path: path.to_path_buf(),
                source,
            })
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for Stopwords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self(iter.into_iter().map(|s| normalize(&s.into())).collect())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("cannot read stopword file {path}: {source}")]
pub struct StopwordsError {
    pub path: PathBuf,
    #[source]
    pub source: std::io::Error,
}

fn normalize(text: &str) -> String {
    let lower = text.nfc().collect::<String>().to_lowercase();
    // lowercasing can leave decomposed sequences behind
    lower.nfc().collect()
}

/// Lowercases, splits on whitespace and strips leading/trailing
/// non-alphanumeric characters from each token. Tokens left empty are
/// dropped; interior punctuation (`anti-malware`, `3.5`) is kept.
pub fn tokenize(text: &str) -> Vec<String> {
    normalize(text)
        .split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Order-preserving filter.
pub fn remove_stopwords(tokens: Vec<String>, stopwords: &Stopwords) -> Vec<String> {
    tokens
        .into_iter()
        .filter(|t| !stopwords.contains(t))
        .collect()
}

/// `tokenize` followed by `remove_stopwords`.
pub fn clean(text: &str, stopwords: &Stopwords) -> Vec<String> {
    remove_stopwords(tokenize(text), stopwords)
}
