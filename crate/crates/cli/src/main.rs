//! `anflo`: learn flow models from trusted apps and flag anomalous ones.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const ANOMALOUS: u8 = 1;
    pub const EMPTY_CORPUS: u8 = 2;
    pub const CATALOG: u8 = 3;
    pub const MODEL: u8 = 4;
    pub const BUNDLE_ERRORS: u8 = 5;
    pub const USAGE: u8 = 64;
    pub const OTHER: u8 = 70;
}

/// An error carrying the exit code it should produce.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn new(code: u8, error: anyhow::Error) -> Self {
        Failure { code, error }
    }
    pub fn usage(error: anyhow::Error) -> Self {
        Failure::new(exit::USAGE, error)
    }
    pub fn catalog(error: anyhow::Error) -> Self {
        Failure::new(exit::CATALOG, error)
    }
    pub fn model(error: anyhow::Error) -> Self {
        Failure::new(exit::MODEL, error)
    }
    pub fn other(error: anyhow::Error) -> Self {
        Failure::new(exit::OTHER, error)
    }
}

#[derive(Parser)]
#[command(
    name = "anflo",
    version,
    about = "Flag apps whose sensitive data flows are unusual for what they claim to do"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a flow model set from a directory of trusted bundles.
    Learn(LearnArgs),
    /// Classify bundles against a learned model set.
    Classify(ClassifyArgs),
    /// Classify bundles and report timing statistics.
    Bench(ClassifyArgs),
    /// Run the taint analysis alone and print each bundle's flows.
    Flows(FlowsArgs),
    /// Inspect a learned model set.
    Model {
        #[command(subcommand)]
        command: ModelCommand,
    },
}

#[derive(Subcommand)]
enum ModelCommand {
    /// Print topics, matrices and thresholds.
    Info {
        model: PathBuf,
        /// Number of top words per topic.
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
}

/// Options shared by every command that pre-processes text.
#[derive(Args, Clone)]
pub struct TextArgs {
    /// TOML file with defaults for any of the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Source/sink catalog (defaults to the built-in one).
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    #[arg(long)]
    pub lemmas: Option<PathBuf>,
    /// Minimum stopword ratio for a description to count as English.
    #[arg(long)]
    pub english_threshold: Option<f64>,
}

#[derive(Args)]
pub struct LearnArgs {
    #[command(flatten)]
    pub text: TextArgs,
    /// Directory of trusted `.app` bundles (searched recursively).
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Where to write the model set.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// topic | single | category
    #[arg(long)]
    pub strategy: Option<String>,
    /// interpolated | tukey
    #[arg(long)]
    pub quantile: Option<String>,
    /// Label file: `<Label> <anchor words...>` per line.
    #[arg(long)]
    pub topic_labels: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub train_iters: Option<usize>,
    #[arg(long)]
    pub infer_iters: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Minimum number of words in a description.
    #[arg(long)]
    pub min_words: Option<usize>,
    #[arg(long)]
    pub require_english: Option<bool>,
    /// Also write the learn summary as JSON.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub text: TextArgs,
    /// Model set written by `anflo learn`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Write the reports as JSON to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// text | json
    #[arg(long, default_value = "text")]
    pub format: String,
    /// Include per-app wall-clock time in reports.
    #[arg(long)]
    pub timing: bool,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Bundles to classify.
    pub bundles: Vec<PathBuf>,
}

#[derive(Args)]
pub struct FlowsArgs {
    #[command(flatten)]
    pub text: TextArgs,
    /// Also print a witness path for every flow.
    #[arg(long)]
    pub verbose: bool,
    #[arg(required = true)]
    pub bundles: Vec<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                exit::USAGE
            } else {
                exit::OK
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Learn(a) => commands::learn(a),
        Command::Classify(a) => commands::classify(a, false),
        Command::Bench(a) => commands::classify(a, true),
        Command::Flows(a) => commands::flows(a),
        Command::Model {
            command: ModelCommand::Info { model, top },
        } => commands::model_info(&model, top),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
