//! The `reckon` command-line pipeline.
//!
//! Every subcommand reads its inputs, writes machine-readable outputs into
//! the output directory and prints a one-line summary. Exit codes: 0 on
//! success, 1 on usage errors, 2 on data errors.

pub mod artifact;
mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use config::{ConfigError, PipelineConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => CliError::Data(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "reckon", version, about = "Incident-description mining: rules, clusters and consequence prediction")]
pub struct Cli {
    /// Seed for every randomised stage
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory receiving all outputs [default: out]
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Flat `section.key = value` config file; flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct TextArgs {
    /// Corpus file (`.csv` or `.jsonl`) with id, dynamics, consequence
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Stopword file, one word per line [default: bundled Italian list]
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// Tab-separated `word<TAB>tag` ontology
    #[arg(long)]
    pub ontology: Option<PathBuf>,
    /// Replace words by their ontology tags
    #[arg(long)]
    pub use_tags: bool,
    #[arg(long)]
    pub min_token_len: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tokenise a corpus into transactions and word counts
    Preprocess {
        #[command(flatten)]
        text: TextArgs,
        /// Number of most frequent words to report
        #[arg(long, default_value_t = 20)]
        top_k: usize,
    },
    /// Mine positive and negative association rules
    MineRules {
        #[command(flatten)]
        text: TextArgs,
        #[arg(long)]
        minsupp: Option<f64>,
        #[arg(long)]
        mincnf: Option<f64>,
        #[arg(long)]
        idf_min: Option<f64>,
        #[arg(long)]
        idf_max: Option<f64>,
        #[arg(long)]
        max_itemset_size: Option<usize>,
        /// Keep negative rules whose lift is 1 or less
        #[arg(long)]
        no_lift_filter: bool,
    },
    /// Cluster TF-IDF vectors of the descriptions with PAM
    ClusterTfidf {
        #[command(flatten)]
        text: TextArgs,
        /// Number of clusters [default: 30]
        #[arg(long)]
        k: Option<usize>,
        /// cosine or euclidean [default: cosine]
        #[arg(long)]
        metric: Option<String>,
        /// Pick k by silhouette over [k-min, k-max] instead of a fixed k
        #[arg(long)]
        sweep: bool,
        #[arg(long)]
        k_min: Option<usize>,
        #[arg(long)]
        k_max: Option<usize>,
        #[arg(long)]
        max_iter: Option<usize>,
    },
    /// Reduce sentence embeddings with incremental PCA and cluster them
    ClusterEmbeddings {
        /// Embedding matrix (text, or binary when the extension is `.bin`)
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// One id per line, matching the embedding rows [default: row numbers]
        #[arg(long)]
        ids: Option<PathBuf>,
        /// Explained-variance share the retained components must reach [default: 0.85]
        #[arg(long)]
        variance: Option<f64>,
        /// Fixed number of clusters; without it k is swept
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        k_min: Option<usize>,
        #[arg(long)]
        k_max: Option<usize>,
        /// cosine or euclidean [default: euclidean]
        #[arg(long)]
        metric: Option<String>,
        /// Rows per incremental PCA batch [default: 100]
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        max_iter: Option<usize>,
    },
    /// Train the consequence predictor
    TrainLm {
        #[command(flatten)]
        text: TextArgs,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        seq_len: Option<usize>,
        #[arg(long)]
        vocab_size: Option<usize>,
        #[arg(long)]
        embed_dim: Option<usize>,
        /// LSTM units per direction
        #[arg(long)]
        recurrent_units: Option<usize>,
        #[arg(long)]
        dense_units: Option<usize>,
        #[arg(long)]
        dropout: Option<f64>,
    },
    /// Predict consequence tokens for a dynamics description
    Predict {
        /// Model directory written by train-lm [default: <output-dir>/model]
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        text: String,
        #[arg(long, default_value_t = 5)]
        top_k: usize,
    },
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match commands::execute(cli) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
