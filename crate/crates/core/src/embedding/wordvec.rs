//! Pretrained word vectors in the textual `.vec` format and the averaged
//! bag-of-words embedding built on them.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::{Embedding, EmbeddingBackend, EmbeddingError};
use crate::preprocess::{clean, Stopwords};

#[derive(Debug, thiserror::Error)]
pub enum WordVecError {
    #[error("cannot read word vectors {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed header {header:?}: expected \"<count> <dim>\" with dim > 0")]
    Header { header: String },
    #[error("line {line}: token {token:?} has {found} values, header declares {expected}")]
    Arity {
        line: usize,
        token: String,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: token {token:?} has a non-numeric or non-finite value {value:?}")]
    Value {
        line: usize,
        token: String,
        value: String,
    },
    #[error("line {line}: token {token:?} appears twice")]
    DuplicateToken { line: usize, token: String },
}

/// Token -> vector lookup with a single dimension.
#[derive(Clone, Debug, Default)]
pub struct WordVectorTable {
    index: HashMap<String, usize>,
    tokens: Vec<String>,
    data: Vec<f32>,
    dim: usize,
}

impl WordVectorTable {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f32]> {
        self.index.get(token).map(|&i| self.row(i))
    }

    /// Tokens in file order.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Builds a table from in-memory rows. All rows must share one length.
    pub fn from_rows<S: Into<String>>(
        rows: impl IntoIterator<Item = (S, Vec<f32>)>,
    ) -> Result<Self, WordVecError> {
        let mut table = Self::default();
        for (line, (token, values)) in rows.into_iter().enumerate() {
            let token = token.into();
            if table.tokens.is_empty() {
                table.dim = values.len();
            }
            table.push(line + 1, token, &values)?;
        }
        Ok(table)
    }

    fn push(&mut self, line: usize, token: String, values: &[f32]) -> Result<(), WordVecError> {
        if values.len() != self.dim || self.dim == 0 {
            return Err(WordVecError::Arity {
                line,
                token,
                expected: self.dim,
                found: values.len(),
            });
        }
        if self.index.contains_key(&token) {
            return Err(WordVecError::DuplicateToken { line, token });
        }
        self.index.insert(token.clone(), self.tokens.len());
        self.tokens.push(token);
        self.data.extend_from_slice(values);
        Ok(())
    }
}

/// Reads a `.vec` file: a `"<count> <dim>"` header, then one
/// `token v1 .. vdim` line per word. At most `limit` rows are read.
pub fn load_word_vectors(
    path: impl AsRef<Path>,
    limit: Option<usize>,
) -> Result<WordVectorTable, WordVecError> {
    let path = path.as_ref();
    let io_err = |source| WordVecError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut lines = BufReader::new(File::open(path).map_err(io_err)?).lines();

    let header = lines.next().transpose().map_err(io_err)?.unwrap_or_default();
    let dim = parse_header(&header).ok_or_else(|| WordVecError::Header {
        header: header.clone(),
    })?;

    let mut table = WordVectorTable {
        dim,
        ..Default::default()
    };
    let limit = limit.unwrap_or(usize::MAX);
    let mut values = Vec::with_capacity(dim);
    for (i, line) in lines.enumerate() {
        if table.len() >= limit {
            break;
        }
        let line = line.map_err(io_err)?;
        let line_no = i + 2;
        let mut fields = line.split(' ').filter(|f| !f.is_empty());
        let Some(token) = fields.next() else {
            continue;
        };
        values.clear();
        for field in fields {
            match field.trim_end().parse::<f32>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(WordVecError::Value {
                        line: line_no,
                        token: token.to_owned(),
                        value: field.to_owned(),
                    })
                }
            }
        }
        table.push(line_no, token.to_owned(), &values)?;
    }
    Ok(table)
}

fn parse_header(header: &str) -> Option<usize> {
    let mut parts = header.split_whitespace();
    let _count: usize = parts.next()?.parse().ok()?;
    let dim: usize = parts.next()?.parse().ok()?;
    (parts.next().is_none() && dim > 0).then_some(dim)
}

/// Mean of the word vectors of the cleaned, in-vocabulary tokens of `text`.
///
/// Out-of-vocabulary tokens are skipped. When nothing resolves the result is
/// the zero vector (see [`Embedding::is_degenerate`]). Vectors are summed in
/// vocabulary order, so any reordering of the input words gives a bitwise
/// identical result.
pub fn embed_average(
    text: &str,
    table: &WordVectorTable,
    stopwords: &Stopwords,
    backend: &str,
) -> Embedding {
    let mut rows: Vec<usize> = clean(text, stopwords)
        .iter()
        .filter_map(|t| table.index.get(t).copied())
        .collect();
    if rows.is_empty() {
        return Embedding::zeros(backend, table.dim);
    }
    rows.sort_unstable();

    let mut sum = vec![0.0f64; table.dim];
    for &r in &rows {
        for (acc, &v) in sum.iter_mut().zip(table.row(r)) {
            *acc += f64::from(v);
        }
    }
    let n = rows.len() as f64;
    Embedding {
        values: sum.into_iter().map(|s| s / n).collect(),
        backend: backend.to_owned(),
    }
}

/// The averaged word-vector baseline as an [`EmbeddingBackend`].
#[derive(Clone, Debug)]
pub struct WordVecBackend {
    name: String,
    table: Arc<WordVectorTable>,
    stopwords: Arc<Stopwords>,
}

impl WordVecBackend {
    pub fn new(name: impl Into<String>, table: WordVectorTable, stopwords: Stopwords) -> Self {
        Self {
            name: name.into(),
            table: Arc::new(table),
            stopwords: Arc::new(stopwords),
        }
    }

    pub fn table(&self) -> &WordVectorTable {
        &self.table
    }
}

impl EmbeddingBackend for WordVecBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.table.dim
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Embedding>, EmbeddingError> {
        Ok(texts
            .iter()
            .map(|t| embed_average(t, &self.table, &self.stopwords, &self.name))
            .collect())
    }
}
