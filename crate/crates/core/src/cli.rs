//! Command-line driver: `stats`, `embed`, `rank`, `evaluate`, `compare`.
//!
//! Every subcommand accepts the same shared flags. Values may also come from
//! a TOML file given with `--config`; flags win over the file.
//!
//! Exit codes: 0 ok, 2 input error, 3 backend/network error,
//! 4 consistency error.

use std::ffi::OsString;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::corpus::{load_corpus, word_count_stats, Corpus, CorpusError, WordStats};
use crate::embedding::{
    load_word_vectors, store_load, EmbeddingBackend, EmbeddingError, EmbeddingStore,
    HashBackend, RemoteBackend, RemoteClient, RemoteError, StoreBackend, StoreError,
    WordVecBackend, WordVecError,
};
use crate::evaluation::{evaluate, EvalError, EvalReport, DEFAULT_K};
use crate::preprocess::{Stopwords, StopwordsError};
use crate::ranking::{rank_all, Method, RankError, RankOptions, RankedList};
use crate::report::{compare, emit, Aggregation, Format, ReportError};

#[derive(Debug, Parser)]
#[command(name = "reqmatch", version, about = "Rank metrics for security requirements and score the rankings with nDCG@k")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Word-count histograms of requirement and metric descriptions.
    Stats(Shared),
    /// Embed every description and add it to the embedding store.
    Embed(Shared),
    /// Rank metrics for each requirement; writes one JSON line per requirement.
    Rank(Shared),
    /// Score a rankings file against the corpus ground truth.
    Evaluate {
        /// Rankings file written by `rank`.
        rankings: PathBuf,
        #[command(flatten)]
        shared: Shared,
    },
    /// Compare evaluation reports.
    Compare {
        /// Report files written by `evaluate`.
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        /// Backend (or backend/method) the deltas are measured against.
        #[arg(long)]
        baseline: Option<String>,
        #[command(flatten)]
        shared: Shared,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Wordvec,
    Store,
    Remote,
    Hash,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Cosine,
    Knn,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Cosine => Method::Cosine,
            MethodArg::Knn => Method::EuclideanKnn,
        }
    }
}

/// Flags shared by all subcommands. Also the schema of the `--config` file.
#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Shared {
    /// TOML file with defaults for any of these flags.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Corpus JSON file.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendKind>,
    /// Word-vector file in `.vec` text format (wordvec backend).
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    /// Read at most this many word vectors.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Embedding store (JSON Lines). Defaults to <out>/embeddings.jsonl.
    #[arg(long)]
    pub store: Option<PathBuf>,
    /// Embedding service base URL (remote backend).
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Model the service must serve, or the backend to read from a store.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Rank cutoff for kNN lists and nDCG (default 10).
    #[arg(long)]
    pub k: Option<usize>,
    /// Stopword list, one token per line. Defaults to the shipped English list.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// Unit-normalize embeddings before ranking.
    #[arg(long)]
    #[serde(default)]
    pub normalize_baseline: bool,
    /// Ask the embedding service for unit-norm vectors.
    #[arg(long)]
    #[serde(default)]
    pub normalize_remote: bool,
    /// Output directory (default `out`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads / in-flight requests (default 4).
    #[arg(long)]
    pub parallel: Option<usize>,
    /// Seed of the hash backend.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dimension of the hash backend (default 64).
    #[arg(long)]
    pub dim: Option<usize>,
}

impl Shared {
    /// Fills every unset flag from `file`.
    fn merged_with(self, file: Shared) -> Shared {
        Shared {
            config: self.config,
            corpus: self.corpus.or(file.corpus),
            backend: self.backend.or(file.backend),
            vectors: self.vectors.or(file.vectors),
            limit: self.limit.or(file.limit),
            store: self.store.or(file.store),
            endpoint: self.endpoint.or(file.endpoint),
            model: self.model.or(file.model),
            method: self.method.or(file.method),
            k: self.k.or(file.k),
            stopwords: self.stopwords.or(file.stopwords),
            normalize_baseline: self.normalize_baseline || file.normalize_baseline,
            normalize_remote: self.normalize_remote || file.normalize_remote,
            out: self.out.or(file.out),
            parallel: self.parallel.or(file.parallel),
            seed: self.seed.or(file.seed),
            dim: self.dim.or(file.dim),
        }
    }
}

/// Where embeddings come from.
#[derive(Clone, Debug, PartialEq)]
pub enum BackendSpec {
    WordVec {
        vectors: PathBuf,
        limit: Option<usize>,
    },
    Store {
        path: PathBuf,
        model: Option<String>,
    },
    Remote {
        endpoint: String,
        model: Option<String>,
        normalize: bool,
    },
    Hash {
        dim: usize,
        seed: u64,
    },
}

/// Fully resolved settings for one command.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub backend: Option<BackendSpec>,
    pub method: Method,
    pub k: usize,
    pub stopwords: Option<PathBuf>,
    pub normalize_baseline: bool,
    pub out: PathBuf,
    pub store: PathBuf,
    pub parallelism: usize,
    pub seed: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Stopwords(#[from] StopwordsError),
    #[error(transparent)]
    WordVec(#[from] WordVecError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Remote(#[from] RemoteError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{path}: {message}")]
    BadInput { path: PathBuf, message: String },
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Remote(e) if e.is_network() => 3,
            CliError::Embedding(e) if e.is_network() => 3,
            CliError::Rank(e) if e.is_network() => 3,
            CliError::Rank(RankError::DimMismatch { .. } | RankError::DuplicateMetric(_)) => 4,
            CliError::Eval(_) => 4,
            CliError::Report(ReportError::MixedK(..) | ReportError::DuplicateRow(..)) => 4,
            _ => 2,
        }
    }
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    fs::write(path, content).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn ensure_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Backend names may contain `/` or `:`; keep file names portable.
pub fn file_label(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

impl RunConfig {
    pub fn resolve(shared: Shared) -> Result<Self, CliError> {
        let shared = match &shared.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| CliError::BadInput {
                    path: path.clone(),
                    message: e.to_string(),
                })?;
                let file: Shared = toml::from_str(&text).map_err(|e| CliError::BadInput {
                    path: path.clone(),
                    message: e.to_string(),
                })?;
                shared.merged_with(file)
            }
            None => shared,
        };

        let k = shared.k.unwrap_or(DEFAULT_K);
        if k == 0 {
            return Err(CliError::Usage("--k must be at least 1".into()));
        }
        let parallelism = shared.parallel.unwrap_or(4);
        if parallelism == 0 {
            return Err(CliError::Usage("--parallel must be at least 1".into()));
        }
        let out = shared.out.unwrap_or_else(|| PathBuf::from("out"));
        let store = shared
            .store
            .clone()
            .unwrap_or_else(|| out.join("embeddings.jsonl"));
        let seed = shared.seed.unwrap_or(0);

        let backend = match shared.backend {
            None => None,
            Some(BackendKind::Hash) => {
                let dim = shared.dim.unwrap_or(crate::embedding::HashBackend::default().dim());
                if dim == 0 {
                    return Err(CliError::Usage("--dim must be at least 1".into()));
                }
                Some(BackendSpec::Hash { dim, seed })
            }
            Some(BackendKind::Wordvec) => Some(BackendSpec::WordVec {
                vectors: shared
                    .vectors
                    .ok_or_else(|| CliError::Usage("--backend wordvec needs --vectors".into()))?,
                limit: shared.limit,
            }),
            Some(BackendKind::Store) => Some(BackendSpec::Store {
                path: store.clone(),
                model: shared.model.clone(),
            }),
            Some(BackendKind::Remote) => Some(BackendSpec::Remote {
                endpoint: shared
                    .endpoint
                    .ok_or_else(|| CliError::Usage("--backend remote needs --endpoint".into()))?,
                model: shared.model.clone(),
                normalize: shared.normalize_remote,
            }),
        };

        Ok(Self {
            corpus: shared.corpus,
            backend,
            method: shared.method.map(Method::from).unwrap_or(Method::Cosine),
            k,
            stopwords: shared.stopwords,
            normalize_baseline: shared.normalize_baseline,
            out,
            store,
            parallelism,
            seed,
        })
    }

    fn corpus(&self) -> Result<Corpus, CliError> {
        let path = self
            .corpus
            .as_ref()
            .ok_or_else(|| CliError::Usage("--corpus is required".into()))?;
        Ok(load_corpus(path)?)
    }

    fn stopwords(&self) -> Result<Stopwords, CliError> {
        Ok(match &self.stopwords {
            Some(p) => Stopwords::load(p)?,
            None => Stopwords::english(),
        })
    }

    /// Instantiates the configured backend.
    pub fn backend(&self) -> Result<Box<dyn EmbeddingBackend>, CliError> {
        let spec = self
            .backend
            .as_ref()
            .ok_or_else(|| CliError::Usage("--backend is required".into()))?;
        Ok(match spec {
            BackendSpec::Hash { dim, seed } => Box::new(HashBackend::new(*dim, *seed)),
            BackendSpec::WordVec { vectors, limit } => {
                let table = load_word_vectors(vectors, *limit)?;
                let stem = vectors
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "vectors".into());
                Box::new(WordVecBackend::new(
                    format!("wordvec-{stem}"),
                    table,
                    self.stopwords()?,
                ))
            }
            BackendSpec::Store { path, model } => {
                let store = Arc::new(store_load(path)?);
                Box::new(StoreBackend::new(store, model.as_deref())?)
            }
            BackendSpec::Remote {
                endpoint,
                model,
                normalize,
            } => {
                let mut client = RemoteClient::new(endpoint.clone());
                client.parallelism = self.parallelism;
                Box::new(RemoteBackend::connect(client, model.as_deref(), *normalize)?)
            }
        })
    }
}

#[derive(Serialize)]
struct StatsFile<'a> {
    requirements: &'a WordStats,
    metrics: &'a WordStats,
}

fn histogram_tsv(stats: &WordStats) -> String {
    let mut out = String::from("words\tfrequency\n");
    for (words, freq) in &stats.histogram {
        out.push_str(&format!("{words}\t{freq}\n"));
    }
    out
}

pub fn cmd_stats(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let corpus = cfg.corpus()?;
    let (reqs, metrics) = word_count_stats(&corpus);
    ensure_dir(&cfg.out)?;
    let json = cfg.out.join("word_stats.json");
    let body = serde_json::to_string_pretty(&StatsFile {
        requirements: &reqs,
        metrics: &metrics,
    })
    .expect("stats serialize");
    write_file(&json, &(body + "\n"))?;
    let req_tsv = cfg.out.join("word_hist_requirements.tsv");
    let met_tsv = cfg.out.join("word_hist_metrics.tsv");
    write_file(&req_tsv, &histogram_tsv(&reqs))?;
    write_file(&met_tsv, &histogram_tsv(&metrics))?;
    println!(
        "requirements: n={} mean={:.3} words; metrics: n={} mean={:.3} words",
        reqs.n, reqs.mean, metrics.n, metrics.mean
    );
    Ok(vec![json, req_tsv, met_tsv])
}

/// Summary of an `embed` run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmbedSummary {
    pub path: PathBuf,
    pub added: usize,
    pub existing: usize,
    pub total_records: usize,
}

pub fn cmd_embed(cfg: &RunConfig) -> Result<EmbedSummary, CliError> {
    if matches!(cfg.backend, Some(BackendSpec::Store { .. })) {
        return Err(CliError::Usage(
            "embed needs a producing backend (wordvec, remote or hash), not store".into(),
        ));
    }
    let corpus = cfg.corpus()?;
    let backend = cfg.backend()?;
    let mut store = if cfg.store.exists() {
        store_load(&cfg.store)?
    } else {
        EmbeddingStore::new()
    };

    let mut pending: Vec<&str> = Vec::new();
    let mut existing = 0;
    let texts = corpus
        .requirements
        .iter()
        .map(|r| r.description.as_str())
        .chain(corpus.metrics.iter().map(|m| m.description.as_str()));
    for text in texts {
        if pending.contains(&text) {
            continue;
        }
        if store.contains_text(backend.name(), text) {
            existing += 1;
        } else {
            pending.push(text);
        }
    }

    if !pending.is_empty() {
        let vectors = backend.embed_batch(&pending)?;
        for (text, e) in pending.iter().zip(vectors) {
            store.insert_text(text, e)?;
        }
        if let Some(parent) = cfg.store.parent().filter(|p| !p.as_os_str().is_empty()) {
            ensure_dir(parent)?;
        }
        store.save(&cfg.store)?;
    }
    println!(
        "{}: {} new, {} already stored ({} records)",
        cfg.store.display(),
        pending.len(),
        existing,
        store.len()
    );
    Ok(EmbedSummary {
        path: cfg.store.clone(),
        added: pending.len(),
        existing,
        total_records: store.len(),
    })
}

pub fn rankings_path(out: &Path, backend: &str, method: Method) -> PathBuf {
    out.join(format!("rankings-{}-{}.jsonl", file_label(backend), method))
}

pub fn report_path(out: &Path, backend: &str, method: Method) -> PathBuf {
    out.join(format!("report-{}-{}.json", file_label(backend), method))
}

pub fn cmd_rank(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let corpus = cfg.corpus()?;
    let backend = cfg.backend()?;
    let lists = rank_all(
        &corpus,
        backend.as_ref(),
        RankOptions {
            method: cfg.method,
            k: cfg.k,
            normalize: cfg.normalize_baseline,
            parallelism: cfg.parallelism,
        },
    )?;
    ensure_dir(&cfg.out)?;
    let path = rankings_path(&cfg.out, backend.name(), cfg.method);
    let mut body = String::new();
    for l in &lists {
        body.push_str(&l.to_json_line());
        body.push('\n');
    }
    write_file(&path, &body)?;
    println!("{}", path.display());
    Ok(path)
}

/// Reads a rankings JSON Lines file.
pub fn read_rankings(path: &Path) -> Result<Vec<RankedList>, CliError> {
    let bad = |message: String| CliError::BadInput {
        path: path.to_path_buf(),
        message,
    };
    let file = fs::File::open(path).map_err(|e| bad(e.to_string()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| bad(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let list: RankedList =
            serde_json::from_str(&line).map_err(|e| bad(format!("line {}: {e}", i + 1)))?;
        out.push(list);
    }
    Ok(out)
}

pub fn cmd_evaluate(cfg: &RunConfig, rankings: &Path) -> Result<PathBuf, CliError> {
    let corpus = cfg.corpus()?;
    let lists = read_rankings(rankings)?;
    let report = evaluate(&lists, &corpus.ground_truth, cfg.k)?;
    ensure_dir(&cfg.out)?;
    let path = report_path(&cfg.out, &report.backend, report.method);
    report.save(&path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    println!(
        "{} {}: mean nDCG@{} nonzero={:.6} all={:.6} nonzero_count={}/{}",
        report.backend,
        report.method,
        report.k,
        report.mean_nonzero,
        report.mean_all,
        report.nonzero_count,
        report.per_requirement.len()
    );
    Ok(path)
}

pub fn cmd_compare(
    cfg: &RunConfig,
    reports: &[PathBuf],
    baseline: Option<&str>,
) -> Result<Vec<PathBuf>, CliError> {
    let mut loaded = Vec::with_capacity(reports.len());
    for p in reports {
        let text = fs::read_to_string(p).map_err(|e| CliError::BadInput {
            path: p.clone(),
            message: e.to_string(),
        })?;
        loaded.push(EvalReport::from_json(&text).map_err(|e| CliError::BadInput {
            path: p.clone(),
            message: e.to_string(),
        })?);
    }
    let comparison = compare(&loaded, baseline)?;
    ensure_dir(&cfg.out)?;
    let outputs = [
        ("comparison.csv", Format::Csv),
        ("comparison.json", Format::Json),
        ("plot_nonzero.tsv", Format::PlotData(Aggregation::NonZero)),
        ("plot_all.tsv", Format::PlotData(Aggregation::All)),
    ];
    let mut written = Vec::new();
    for (name, format) in outputs {
        let path = cfg.out.join(name);
        emit(&comparison, format, &path)?;
        written.push(path);
    }
    print!("{}", comparison.to_csv());
    Ok(written)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Stats(s) => cmd_stats(&RunConfig::resolve(s)?).map(drop),
        Command::Embed(s) => cmd_embed(&RunConfig::resolve(s)?).map(drop),
        Command::Rank(s) => cmd_rank(&RunConfig::resolve(s)?).map(drop),
        Command::Evaluate { rankings, shared } => {
            cmd_evaluate(&RunConfig::resolve(shared)?, &rankings).map(drop)
        }
        Command::Compare {
            reports,
            baseline,
            shared,
        } => cmd_compare(&RunConfig::resolve(shared)?, &reports, baseline.as_deref()).map(drop),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
