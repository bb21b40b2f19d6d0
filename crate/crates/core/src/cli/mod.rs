//! The `qasim` command line: one subcommand per pipeline stage.
//!
//! Exit codes are 0 on success, 1 when a command fails while running and 2
//! for usage errors, invalid configuration and missing input files.

mod commands;
mod config;

use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::{CorpusConfig, PairConfig, PathConfig, RunConfig, SEED_ENV};

use crate::embedding::{Combine, Word2VecMode};
use crate::simnet::Activation;
use crate::training::Optimizer;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad configuration or missing inputs.
    Usage(String),
    /// The command started but could not complete.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_FAILURE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "qasim", version, about = "Question answering with paragraph vectors and a two-tower similarity network")]
pub struct Cli {
    /// JSON run configuration; command-line flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Seed for every component. Overrides the config file and QASIM_SEED.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Question,
    Answer,
}

/// Where documents come from: a plain corpus (one document per line) or
/// one side of a QA dataset.
#[derive(Debug, Args)]
pub struct SourceArgs {
    /// Plain-text corpus, one document per line.
    #[arg(long, conflicts_with = "qa")]
    pub corpus: Option<PathBuf>,
    /// QA dataset (JSONL records with question, candidates, correct).
    #[arg(long)]
    pub qa: Option<PathBuf>,
    /// Which side of the QA dataset to read.
    #[arg(long, value_enum, default_value = "question")]
    pub side: SideArg,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub negatives: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long = "lr")]
    pub learning_rate: Option<f64>,
    #[arg(long = "min-lr")]
    pub min_learning_rate: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a vocabulary file and print corpus statistics.
    BuildVocab {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        min_count: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train CBOW or Skip-gram word vectors.
    TrainWord2vec {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "skipgram")]
        mode: Word2VecMode,
        #[command(flatten)]
        embed: EmbedArgs,
        #[arg(long)]
        out: PathBuf,
        /// Also write "token v1 ... vd" lines.
        #[arg(long)]
        export_text: Option<PathBuf>,
    },
    /// Train a paragraph-vector (PV-DM) model.
    TrainDoc2vec {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[arg(long, value_enum)]
        combine: Option<Combine>,
        #[command(flatten)]
        embed: EmbedArgs,
        #[arg(long)]
        out: PathBuf,
        /// Also write the word vectors as "token v1 ... vd" lines.
        #[arg(long)]
        export_text: Option<PathBuf>,
    },
    /// Sample labeled (question, answer) pairs from the candidate pools.
    SamplePairs {
        #[arg(long)]
        qa: Option<PathBuf>,
        #[arg(long = "n")]
        n_pairs: Option<usize>,
        #[arg(long)]
        positive_fraction: Option<f64>,
        #[arg(long)]
        val_fraction: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Receives the validation share; without it every pair goes to --out.
        #[arg(long)]
        val_out: Option<PathBuf>,
    },
    /// Train the similarity network on doc2vec features.
    TrainSimnet {
        #[arg(long)]
        question_model: Option<PathBuf>,
        #[arg(long)]
        answer_model: Option<PathBuf>,
        #[arg(long)]
        pairs: Option<PathBuf>,
        #[arg(long)]
        val_pairs: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Write `<out>.epoch<N>` every N epochs.
        #[arg(long)]
        checkpoint_every: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long = "lr")]
        lr0: Option<f64>,
        #[arg(long)]
        dropout: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        patience: Option<usize>,
        #[arg(long, value_enum)]
        optimizer: Option<Optimizer>,
        #[arg(long, value_enum)]
        activation: Option<Activation>,
    },
    /// Score pools and pairs and print a JSON report.
    Eval {
        #[arg(long)]
        qa: Option<PathBuf>,
        #[arg(long)]
        question_model: Option<PathBuf>,
        #[arg(long)]
        answer_model: Option<PathBuf>,
        #[arg(long)]
        simnet: Option<PathBuf>,
        /// Pairs for pair accuracy; defaults to every candidate of every pool.
        #[arg(long)]
        pairs: Option<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
        /// Add a bag-of-words + linear classifier baseline trained on --train-pairs.
        #[arg(long, requires = "train_pairs")]
        bow_baseline: bool,
        #[arg(long)]
        train_pairs: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Learning curves of BoW vs. doc2vec features under a linear classifier.
    Classify {
        /// Labeled JSONL: {"text": ..., "label": 0|1}.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "0.2,0.4,0.6,0.8")]
        ratios: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        seeds: Vec<u64>,
        #[command(flatten)]
        embed: EmbedArgs,
        #[arg(long, value_enum)]
        combine: Option<Combine>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Answer questions read from standard input, one per line.
    Ask {
        #[arg(long)]
        question_model: Option<PathBuf>,
        #[arg(long)]
        question_vocab: Option<PathBuf>,
        #[arg(long)]
        answer_model: Option<PathBuf>,
        /// QA dataset whose answers form the pool.
        #[arg(long)]
        qa: Option<PathBuf>,
        #[arg(long)]
        simnet: Option<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Write one of the synthetic fixtures.
    GenFixture {
        #[arg(value_enum)]
        kind: FixtureKind,
        #[arg(long)]
        out: PathBuf,
        /// Questions (planted-qa), sentences (paraphrase) or documents (two-cluster).
        #[arg(long)]
        n: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FixtureKind {
    PlantedQa,
    Paraphrase,
    TwoCluster,
}

/// Parse `args` (program name first) and run the command. Returns the
/// process exit code.
pub fn run<I, T>(args: I, stdin: &mut dyn BufRead, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    match commands::execute(cli, env_seed.as_deref(), stdin, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "qasim: {e}");
            e.exit_code()
        }
    }
}

/// Inputs must exist before a command starts.
fn require_file(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("input file {} does not exist", path.display())))
    }
}

/// A required path from the flag or, failing that, the config.
fn pick(flag: Option<PathBuf>, config: &Option<PathBuf>, name: &str) -> CliResult<PathBuf> {
    let path = flag
        .or_else(|| config.clone())
        .ok_or_else(|| CliError::Usage(format!("missing --{name} (or paths.{} in the config)", name.replace('-', "_"))))?;
    require_file(&path)?;
    Ok(path)
}
