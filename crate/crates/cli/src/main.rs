//! `ukm`: train, evaluate and compare user-knowledge classifiers.
//!
//! Exit codes: 0 success, 2 bad configuration, 3 dataset error,
//! 4 numeric failure, 5 model-file error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;
use ukm_core::pipeline::PipelineError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("model file error: {0}")]
    Format(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
            CliError::Format(_) => 5,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else if e.is_numeric() {
            CliError::Numeric(e.to_string())
        } else if let PipelineError::Format(_) = e {
            CliError::Format(e.to_string())
        } else {
            CliError::Data(e.to_string())
        }
    }
}

#[derive(Parser)]
#[command(name = "ukm", version, about = "Neuro-fuzzy and MLP user knowledge classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug, Default)]
pub struct SplitArgs {
    /// Split mode: ratio, predefined or kfold (default: the model's own)
    #[arg(long)]
    pub split: Option<String>,
    #[arg(long)]
    pub ratio: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub train_rows: Option<usize>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub fold: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write model.json and trace.json to the output directory
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override a config key, e.g. --set epochs=50 (repeatable)
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Evaluate a trained model on the test part of a split and emit a JSON report
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[command(flatten)]
        split: SplitArgs,
        /// Write the report here instead of standard output
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the one-against-all ROC curve of one class as CSV and print its AUC
    Roc {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Class index 0..3 (very low .. high)
        #[arg(long)]
        class: usize,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        split: SplitArgs,
    },
    /// Train and evaluate several configurations and tabulate them with published results
    Compare {
        #[arg(long = "config")]
        configs: Vec<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        published: PathBuf,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Test-set size the published MWCS/CAP pairs are checked against
        #[arg(long, default_value_t = 145)]
        test_size: usize,
    },
    /// Print the class distribution of a dataset
    DatasetStats {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        published: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train {
            config,
            overrides,
            dataset,
            out_dir,
        } => commands::train(config.as_deref(), &overrides, dataset, out_dir),
        Command::Evaluate {
            model,
            dataset,
            split,
            out,
        } => commands::evaluate(&model, &dataset, &split, out.as_deref()),
        Command::Roc {
            model,
            dataset,
            class,
            out,
            split,
        } => commands::roc(&model, &dataset, class, &out, &split),
        Command::Compare {
            configs,
            overrides,
            published,
            dataset,
            out_dir,
            test_size,
        } => commands::compare(&configs, &overrides, &published, dataset, &out_dir, test_size),
        Command::DatasetStats { dataset, published } => commands::dataset_stats(&dataset, published.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ukm: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
