//! `csge` command-line interface.
//!
//! Exit codes: 0 on success, 1 on usage errors (arguments, config), 2 on
//! data errors (datasets, models, prediction files).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// A usage problem (exit 1) or a data problem (exit 2).
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(message) => write!(f, "usage error: {message}"),
            CliError::Data(message) => write!(f, "data error: {message}"),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "csge",
    version,
    about = "Coopetitive soft gating ensemble: fit, predict, evaluate, and explain"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model from a TOML config and write the model document
    Fit {
        /// Run configuration (TOML)
        #[arg(long)]
        config: PathBuf,
        /// Out-of-fold predictions produced by external tooling
        /// (columns: sample_id, member_id, lead_time, prediction)
        #[arg(long)]
        external_predictions: Option<PathBuf>,
        /// Model output path (default: <output_dir>/model.json)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predict a CSV with a trained model; writes predictions and
    /// per-prediction weight breakdowns
    Predict {
        /// Model document written by `fit`
        #[arg(long)]
        model: PathBuf,
        /// CSV containing the model's feature columns
        #[arg(long)]
        data: PathBuf,
        /// Output directory for predictions.csv and breakdown.csv
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Repeated cross-validation of the ensemble, its members, and the
    /// plain-averaging baseline
    Eval {
        /// Run configuration (TOML)
        #[arg(long)]
        config: PathBuf,
        /// Outer folds per repetition
        #[arg(long, default_value_t = 10)]
        folds: usize,
        /// Number of repetition seeds (config seed, seed + 1, ...)
        #[arg(long, default_value_t = 10)]
        seeds: usize,
        /// Report file (CSV, or Markdown with --markdown)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the report as a Markdown table
        #[arg(long, default_value_t = false)]
        markdown: bool,
    },
    /// Run a noise-free synthetic experiment end to end
    Synthetic {
        /// Which aspect to exercise: global, local, or time
        #[arg(long)]
        which: String,
        /// Training grid size
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 0.0)]
        x_min: f64,
        #[arg(long, default_value_t = 20.0)]
        x_max: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output directory for the report and XY curves
        #[arg(long, default_value = "synthetic-out")]
        out_dir: PathBuf,
    },
    /// Summarize weight breakdowns of a model over a dataset
    Explain {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Also write the full per-row breakdown CSV here
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fit {
            config,
            external_predictions,
            out,
        } => commands::cmd_fit(&config, external_predictions.as_deref(), out.as_deref()),
        Command::Predict {
            model,
            data,
            out_dir,
        } => commands::cmd_predict(&model, &data, &out_dir),
        Command::Eval {
            config,
            folds,
            seeds,
            out,
            markdown,
        } => commands::cmd_eval(&config, folds, seeds, out.as_deref(), markdown),
        Command::Synthetic {
            which,
            samples,
            x_min,
            x_max,
            seed,
            out_dir,
        } => commands::cmd_synthetic(&which, samples, (x_min, x_max), seed, &out_dir),
        Command::Explain { model, data, out } => {
            commands::cmd_explain(&model, &data, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version are not errors
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ CliError::Usage(_)) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
        Err(e @ CliError::Data(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}
