//! Cross-backend comparison tables and plot data.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::evaluation::EvalReport;
use crate::ranking::Method;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub backend: String,
    pub method: Method,
    pub mean_nonzero: f64,
    pub mean_all: f64,
    pub nonzero_count: usize,
    /// `mean_nonzero - baseline.mean_nonzero`; absent without a baseline.
    pub delta_nonzero: Option<f64>,
    pub delta_all: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub k: usize,
    pub baseline: Option<String>,
    /// Sorted by descending `mean_nonzero`.
    pub rows: Vec<ComparisonRow>,
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("nothing to compare")]
    Empty,
    #[error("reports use different cutoffs: k={0} and k={1}")]
    MixedK(usize, usize),
    #[error("backend {0:?} appears twice for method {1}")]
    DuplicateRow(String, Method),
    #[error("baseline {0:?} matches no report")]
    UnknownBaseline(String),
    #[error("baseline {0:?} matches several reports; use <backend>/<method>")]
    AmbiguousBaseline(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Which mean a plot-data file carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Aggregation {
    /// Mean over requirements with nonzero nDCG.
    NonZero,
    /// Mean over all requirements.
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    PlotData(Aggregation),
}

fn matches_baseline(row: &ComparisonRow, baseline: &str) -> bool {
    row.backend == baseline || format!("{}/{}", row.backend, row.method) == baseline
}

/// One row per report, best `mean_nonzero` first. `baseline` names a
/// backend (or `backend/method`) whose means the deltas are taken against.
pub fn compare(reports: &[EvalReport], baseline: Option<&str>) -> Result<Comparison, ReportError> {
    let first = reports.first().ok_or(ReportError::Empty)?;
    let mut rows: Vec<ComparisonRow> = Vec::with_capacity(reports.len());
    for r in reports {
        if r.k != first.k {
            return Err(ReportError::MixedK(first.k, r.k));
        }
        if rows
            .iter()
            .any(|x| x.backend == r.backend && x.method == r.method)
        {
            return Err(ReportError::DuplicateRow(r.backend.clone(), r.method));
        }
        rows.push(ComparisonRow {
            backend: r.backend.clone(),
            method: r.method,
            mean_nonzero: r.mean_nonzero,
            mean_all: r.mean_all,
            nonzero_count: r.nonzero_count,
            delta_nonzero: None,
            delta_all: None,
        });
    }

    if let Some(b) = baseline {
        let hits: Vec<&ComparisonRow> = rows.iter().filter(|r| matches_baseline(r, b)).collect();
        let (base_nz, base_all) = match hits.as_slice() {
            [] => return Err(ReportError::UnknownBaseline(b.to_owned())),
            [one] => (one.mean_nonzero, one.mean_all),
            _ => return Err(ReportError::AmbiguousBaseline(b.to_owned())),
        };
        for r in &mut rows {
            r.delta_nonzero = Some(r.mean_nonzero - base_nz);
            r.delta_all = Some(r.mean_all - base_all);
        }
    }

    rows.sort_by(|a, b| {
        b.mean_nonzero
            .total_cmp(&a.mean_nonzero)
            .then_with(|| a.backend.cmp(&b.backend))
            .then_with(|| a.method.as_str().cmp(b.method.as_str()))
    });
    Ok(Comparison {
        k: first.k,
        baseline: baseline.map(str::to_owned),
        rows,
    })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

impl Comparison {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("backend,method,mean_nonzero,mean_all,nonzero_count,delta_nonzero\n");
        for r in &self.rows {
            let delta = r.delta_nonzero.map(|d| format!("{d:.6}")).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{:.6},{:.6},{},{}",
                csv_field(&r.backend),
                r.method,
                r.mean_nonzero,
                r.mean_all,
                r.nonzero_count,
                delta
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("comparison serializes") + "\n"
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    fn label(&self, row: &ComparisonRow) -> String {
        let repeated = self.rows.iter().filter(|r| r.backend == row.backend).count() > 1;
        let label = if repeated {
            format!("{} ({})", row.backend, row.method)
        } else {
            row.backend.clone()
        };
        label.replace(['\t', '\n', '\r'], " ")
    }

    /// Two-column TSV, `label` and the chosen mean, one line per row.
    pub fn to_plot_data(&self, mode: Aggregation) -> String {
        let mut out = String::from("label\tvalue\n");
        for r in &self.rows {
            let value = match mode {
                Aggregation::NonZero => r.mean_nonzero,
                Aggregation::All => r.mean_all,
            };
            let _ = writeln!(out, "{}\t{:.6}", self.label(r), value);
        }
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
            Format::PlotData(mode) => self.to_plot_data(mode),
        }
    }
}

/// Writes `comparison` to `path` in `format`.
pub fn emit(comparison: &Comparison, format: Format, path: impl AsRef<Path>) -> Result<(), ReportError> {
    let path = path.as_ref();
    fs::write(path, comparison.render(format)).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })
}
