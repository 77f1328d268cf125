//! Command-line front end.
//!
//! Exit codes: 0 success, 1 runtime or numeric failure, 2 usage or
//! validation error. Errors that end a command are written to stderr as one
//! JSON line `{"error": {"kind", "message"}}`.

mod config;
mod embed;
mod eval;
mod fit;
mod score;
mod simulate;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::ingest::IngestError;
use crate::metrics::EvalError;
use crate::semantic::SemanticError;
use crate::vmf::VmfError;

pub use config::Config;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const DEFAULT_TIMEOUT_MS: u64 = 30_000;

#[derive(Debug, Parser)]
#[command(
    name = "dcu",
    version,
    about = "vMF concentration uncertainty for sampled generations"
)]
pub struct Cli {
    /// TOML file with defaults for optional flags ([score], [eval], [simulate], [embed]).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a vMF to groups of stored embeddings; one JSON line per group.
    Fit(FitArgs),
    /// Score every manifest record; JSONL in manifest order.
    Score(ScoreArgs),
    /// Label records, compute accuracy and AUROC with bootstrap intervals.
    Eval(EvalArgs),
    /// Sample from a known vMF and report how well the fit recovers it.
    Simulate(SimulateArgs),
    /// Embed manifest texts through a remote service into an embedding file.
    Embed(EmbedArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Embedding file; repeat to merge several with the same dimension.
    #[arg(long = "embeddings", required = true, value_name = "PATH")]
    pub embeddings: Vec<PathBuf>,
    /// Comma-separated keys forming one group; repeatable.
    #[arg(long = "group", value_name = "KEYS")]
    pub groups: Vec<String>,
    /// Keys forming one more group. With no keys and no --group, the whole store is one group.
    pub keys: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long, value_name = "PATH")]
    pub manifest: PathBuf,
    #[arg(long = "embeddings", required = true, value_name = "PATH")]
    pub embeddings: Vec<PathBuf>,
    /// Also compute semantic entropy (exact-match oracle unless --nli-endpoint is set).
    #[arg(long)]
    pub se: bool,
    /// NLI service URL; implies --se.
    #[arg(long, value_name = "URL")]
    pub nli_endpoint: Option<String>,
    #[arg(long, value_name = "MS")]
    pub timeout_ms: Option<u64>,
    /// Write here instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// JSONL produced by `score`.
    #[arg(long, value_name = "PATH")]
    pub scores: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub manifest: PathBuf,
    /// Needed with --mcq for option embeddings.
    #[arg(long = "embeddings", value_name = "PATH")]
    pub embeddings: Vec<PathBuf>,
    /// Label multiple-choice records by cosine argmax over option embeddings.
    #[arg(long)]
    pub mcq: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// ROUGE-L F1 above which a text answer counts as correct.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub dataset: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    /// Also write the CSV header and row here.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub dim: usize,
    #[arg(long)]
    pub kappa: f64,
    /// Samples per trial.
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long, value_name = "PATH")]
    pub manifest: PathBuf,
    #[arg(long, value_name = "URL")]
    pub endpoint: Option<String>,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long, value_name = "MS")]
    pub timeout_ms: Option<u64>,
    /// Batches in flight at once.
    #[arg(long)]
    pub concurrency: Option<usize>,
}

/// An error that ends a command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    #[serde(skip)]
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl Failure {
    pub fn usage(kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            kind,
            message: message.into(),
        }
    }

    pub fn runtime(kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            code: EXIT_RUNTIME,
            kind,
            message: message.into(),
        }
    }

    pub(crate) fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "error": self })
    }
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        let kind = match &e {
            IngestError::Io(_) => "io",
            IngestError::Parse { .. } => "parse_error",
            IngestError::Schema { .. } => "schema_error",
            IngestError::MagicMismatch(_) => "magic_mismatch",
            IngestError::UnsupportedVersion(_) => "unsupported_version",
            IngestError::TruncatedFile { .. } => "truncated_file",
            IngestError::TrailingBytes => "trailing_bytes",
            IngestError::InvalidKey { .. } => "invalid_key",
            IngestError::DuplicateKey(_) => "duplicate_key",
            IngestError::KeyTooLong(_) => "key_too_long",
            IngestError::TooManyEntries => "too_many_entries",
            IngestError::InvalidDimension(_) => "invalid_dimension",
            IngestError::DimensionMismatch { .. } => "dimension_mismatch",
            IngestError::MissingKey { .. } => "missing_key",
            IngestError::EmbedServiceFailure { .. } => "embed_service_failure",
        };
        let code = match e {
            IngestError::EmbedServiceFailure { .. } => EXIT_RUNTIME,
            _ => EXIT_USAGE,
        };
        Self {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

impl From<VmfError> for Failure {
    fn from(e: VmfError) -> Self {
        let (code, kind) = match &e {
            VmfError::ZeroVector => (EXIT_USAGE, "zero_vector"),
            VmfError::NotUnit(_) => (EXIT_USAGE, "not_unit"),
            VmfError::NonFinite => (EXIT_USAGE, "non_finite"),
            VmfError::DimensionTooSmall(_) => (EXIT_USAGE, "dimension_too_small"),
            VmfError::DimensionMismatch { .. } => (EXIT_USAGE, "dimension_mismatch"),
            VmfError::EmptyBatch => (EXIT_USAGE, "empty_batch"),
            VmfError::TooFewSamples(_) => (EXIT_USAGE, "too_few_samples"),
            VmfError::InvalidMeanResultant(_) => (EXIT_USAGE, "invalid_mean_resultant"),
            VmfError::InvalidKappa(_) => (EXIT_USAGE, "invalid_kappa"),
            VmfError::NoMeanDirection => (EXIT_RUNTIME, "no_mean_direction"),
            VmfError::NonConvergence { .. } => (EXIT_RUNTIME, "non_convergence"),
        };
        Self {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        let (code, kind) = match &e {
            EvalError::DegenerateLabels => (EXIT_RUNTIME, "degenerate_labels"),
            EvalError::NonFiniteScore(_) => (EXIT_USAGE, "non_finite_score"),
            EvalError::Empty | EvalError::TooFewRecords(_) => (EXIT_USAGE, "too_few_records"),
            _ => (EXIT_USAGE, "invalid_evaluation_input"),
        };
        Self {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

impl From<SemanticError> for Failure {
    fn from(e: SemanticError) -> Self {
        match e {
            SemanticError::Empty => Failure::usage("empty_generations", e.to_string()),
            SemanticError::OracleFailure { .. } => {
                Failure::runtime("oracle_failure", e.to_string())
            }
        }
    }
}

pub(crate) fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::runtime("io", format!("{}: {e}", path.display()))
}

/// Writes `bytes` to `path` through a temporary sibling file so that a
/// failure never leaves a partial file behind.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_failure(path, e))?;
    tmp.write_all(bytes).map_err(|e| io_failure(path, e))?;
    tmp.persist(path).map_err(|e| io_failure(path, e.error))?;
    Ok(())
}

/// Output of a command: bytes for stdout (or `--out`) and an exit code.
pub(crate) struct Outcome {
    pub stdout: Vec<u8>,
    pub code: i32,
}

impl Outcome {
    pub fn ok(stdout: Vec<u8>) -> Self {
        Self {
            stdout,
            code: EXIT_OK,
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(cli, stderr) {
        Ok(out) => {
            if stdout
                .write_all(&out.stdout)
                .and_then(|_| stdout.flush())
                .is_err()
            {
                return EXIT_RUNTIME;
            }
            out.code
        }
        Err(f) => {
            let _ = writeln!(stderr, "{}", f.to_json());
            f.code
        }
    }
}

fn execute(cli: Cli, stderr: &mut dyn Write) -> Result<Outcome, Failure> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Fit(a) => fit::run(a),
        Command::Score(a) => score::run(a, &config.score),
        Command::Eval(a) => eval::run(a, &config.eval, stderr),
        Command::Simulate(a) => simulate::run(a, &config.simulate),
        Command::Embed(a) => embed::run(a, &config.embed),
    }
}
