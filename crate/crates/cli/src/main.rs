//! `moodcast` command line: run the mood-forecasting pipeline stage by stage
//! or end to end.
//!
//! Configuration comes from a JSON file (`--config`); individual flags
//! override file keys, which override the built-in defaults.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use moodcast::ingest::ParseMode;
use moodcast::pipeline::{self, Command, InputSpec, PipelineConfig};

#[derive(Parser)]
#[command(
    name = "moodcast",
    about = "Next-day mood prediction from smartphone sensing logs",
    version
)]
struct Cli {
    /// JSON config file (a run manifest is also accepted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Raw input CSV; overrides the config's input block.
    #[arg(long, global = true)]
    input: Option<PathBuf>,

    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Global seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Skip malformed input rows instead of failing.
    #[arg(long, global = true)]
    lenient: bool,

    /// RNN training epochs; overrides the config.
    #[arg(long, global = true)]
    epochs: Option<usize>,

    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Subcommand, Clone, Copy)]
enum CliCommand {
    /// Generate a synthetic raw dataset and its ground truth.
    Synth,
    /// Ingest, prune, fill, and export the wide daily tables.
    Preprocess,
    /// Train the one-vs-one SVM on the classification split.
    TrainSvm,
    /// Train the per-user recurrent networks.
    TrainRnn,
    /// Emit the persistence-baseline prediction series.
    Baseline,
    /// Score all models and write the evaluation report.
    Evaluate,
    /// Run the whole pipeline end to end.
    All,
}

impl From<CliCommand> for Command {
    fn from(value: CliCommand) -> Self {
        match value {
            CliCommand::Synth => Command::Synth,
            CliCommand::Preprocess => Command::Preprocess,
            CliCommand::TrainSvm => Command::TrainSvm,
            CliCommand::TrainRnn => Command::TrainRnn,
            CliCommand::Baseline => Command::Baseline,
            CliCommand::Evaluate => Command::Evaluate,
            CliCommand::All => Command::All,
        }
    }
}

fn resolve_config(cli: &Cli) -> anyhow::Result<PipelineConfig> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => PipelineConfig::default(),
    };
    if let Some(path) = &cli.input {
        config.input = InputSpec::Csv { path: path.clone() };
    }
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if cli.lenient {
        config.parse_mode = ParseMode::Lenient;
    }
    if let Some(epochs) = cli.epochs {
        config.rnn.config.epochs = epochs;
    }
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match resolve_config(&cli) {
        Ok(config) => config,
        Err(err) => {
            eprintln!("error: {err:#}");
            return ExitCode::FAILURE;
        }
    };
    match pipeline::run(cli.command.into(), &config) {
        Ok(summary) => {
            for warning in &summary.warnings {
                eprintln!("warning: {warning}");
            }
            for path in &summary.written {
                println!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
