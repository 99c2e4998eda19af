//! Command-line front end. Every subcommand reads one TOML run config
//! (optionally patched with `--set key=value`) and works inside its
//! `output_dir`.

pub mod commands;
pub mod config;
pub mod data;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use commands::{EvaluationReport, ModelPaths, Stage};
pub use config::RunConfig;
pub use data::{Layout, PreparedDoc, PredictionRecord, NON_TOXIC};

use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "toxclass", version, about = "Two-stage toxic comment classification")]
pub struct Cli {
    /// Run configuration (TOML). Without one, the full preset is used.
    #[arg(short, long, global = true)]
    pub config: Option<PathBuf>,

    /// Override a config key, e.g. `--set training.epochs=5`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StageArg {
    Binary,
    Multilabel,
    Pipeline,
}

impl From<StageArg> for Stage {
    fn from(s: StageArg) -> Self {
        match s {
            StageArg::Binary => Stage::Binary,
            StageArg::Multilabel => Stage::MultiLabel,
            StageArg::Pipeline => Stage::Pipeline,
        }
    }
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Vocabulary file (default: <output_dir>/vocab.txt).
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Binary checkpoint (default: <output_dir>/binary.ckpt).
    #[arg(long)]
    pub binary: Option<PathBuf>,
    /// Multi-label checkpoint (default: <output_dir>/multilabel.ckpt).
    #[arg(long)]
    pub multilabel: Option<PathBuf>,
}

impl ModelArgs {
    fn paths(&self) -> ModelPaths {
        ModelPaths { vocab: self.vocab.clone(), binary: self.binary.clone(), multilabel: self.multilabel.clone() }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ingest and clean the dataset, build the vocabulary.
    Prepare,
    /// Stratified train/val/test split of the prepared data.
    Split,
    /// Train the toxic vs non-toxic classifier.
    TrainBinary,
    /// Train the six-label classifier on toxic documents.
    TrainMultilabel,
    /// Score a stage on a fold, or a predictions file.
    Evaluate {
        #[arg(long, value_enum, default_value = "pipeline")]
        stage: StageArg,
        #[arg(long, default_value = "test")]
        fold: String,
        /// Score this JSON-lines predictions file instead of running models.
        #[arg(long, conflicts_with_all = ["stage", "fold"])]
        predictions: Option<PathBuf>,
        #[command(flatten)]
        models: ModelArgs,
    },
    /// Run the two-stage pipeline on raw text.
    Classify {
        /// CSV/TSV (configured columns), JSON lines with `text`, or plain text lines.
        #[arg(long, required_unless_present = "text")]
        input: Option<PathBuf>,
        /// Classify this text directly; repeatable.
        #[arg(long)]
        text: Vec<String>,
        /// Write JSON lines here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        models: ModelArgs,
    },
    /// Word-level explanation of one prediction.
    Explain {
        #[arg(long)]
        text: String,
        #[arg(long, value_enum, default_value = "multilabel")]
        stage: StageArg,
        /// Class to explain; repeatable. Defaults to `toxic` or all six labels.
        #[arg(long = "class")]
        classes: Vec<String>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        models: ModelArgs,
    },
    /// Label distribution of a dataset.
    Stats {
        /// Dataset file (default: dataset.path from the config).
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Also write the statistics as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Inter-annotator agreement between two annotation files.
    Kappa {
        #[arg(long)]
        first: PathBuf,
        #[arg(long)]
        second: PathBuf,
        /// Expert-labelled control items for trustworthiness.
        #[arg(long)]
        expert: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// Runs one parsed invocation, writing human-readable output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let mut sets = cli.set.clone();
    if let Command::Stats { dataset: Some(p), .. } = &cli.command {
        sets.push(format!("dataset.path={}", toml::Value::String(p.display().to_string())));
    }
    let cfg = RunConfig::load(cli.config.as_deref(), &sets)?;
    log::debug!("config: {cfg:?}");
    match cli.command {
        Command::Prepare => commands::prepare(&cfg, out),
        Command::Split => commands::split(&cfg, out),
        Command::TrainBinary => commands::train_binary(&cfg, out),
        Command::TrainMultilabel => commands::train_multilabel(&cfg, out),
        Command::Evaluate { stage, fold, predictions, models } => match predictions {
            Some(p) => commands::evaluate_predictions(&cfg, &p, out),
            None => commands::evaluate(&cfg, &models.paths(), stage.into(), &fold, out),
        },
        Command::Classify { input, text, output, models } => {
            let mut docs = match &input {
                Some(p) => commands::read_inputs(&cfg, p)?,
                None => Vec::new(),
            };
            let base = docs.len();
            docs.extend(text.into_iter().enumerate().map(|(i, t)| ((base + i).to_string(), t)));
            commands::classify(&cfg, &models.paths(), &docs, output.as_deref(), out)
        }
        Command::Explain { text, stage, classes, output, models } => {
            commands::explain(&cfg, &models.paths(), stage.into(), &text, &classes, output.as_deref(), out)
        }
        Command::Stats { json, .. } => commands::dataset_stats(&cfg, json.as_deref(), out),
        Command::Kappa { first, second, expert, output } => {
            commands::kappa(&cfg, &first, &second, expert.as_deref(), output.as_deref(), out)
        }
    }
}

/// Parses `args`, runs, and returns the process exit code: 0 success,
/// 2 usage or config error, 3 data error, 4 numeric error.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => report(&e),
    }
}

fn report(e: &Error) -> i32 {
    eprintln!("error: {e}");
    e.exit_code()
}
