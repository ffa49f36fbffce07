//! `pavi`: runs the attribute-value identification experiments from one JSON
//! config.
//!
//! A full comparison is
//!
//! ```text
//! pavi -c exp.json gen-data
//! pavi -c exp.json prepare
//! pavi -c exp.json train
//! pavi -c exp.json predict
//! pavi -c exp.json evaluate
//! pavi -c exp.json report
//! ```
//!
//! Set `RUST_LOG=debug` for per-step logging.

mod commands;
mod config;
mod predictions;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Parser, Subcommand};

use commands::{Approach, SplitArg};
use config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "pavi", version, about = "Attribute-value identification as set generation")]
struct Cli {
    /// Experiment config (JSON). Relative paths inside it are resolved
    /// against its directory.
    #[arg(short, long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override one config field, e.g. `--set train.epochs=3`. The value is
    /// parsed as JSON when possible, otherwise taken as a string.
    /// Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic train/dev/test corpus, its manifest and taxonomy.
    GenData {
        /// Generator seed; defaults to the config's `seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Build the frequency index, vocabulary, linearized targets, tagged
    /// corpora and label space.
    Prepare,
    /// Train models; every enabled approach when none is given.
    Train {
        /// Approach to train. Repeatable.
        #[arg(short, long, value_enum)]
        approach: Vec<Approach>,
    },
    /// Write predictions JSONL for trained models.
    Predict {
        /// Approach to run. Repeatable; defaults to every enabled approach.
        #[arg(short, long, value_enum)]
        approach: Vec<Approach>,
        /// Corpus split to predict.
        #[arg(long, value_enum, default_value = "test")]
        split: SplitArg,
    },
    /// Score predictions files against the gold split and write reports.
    Evaluate {
        /// Gold split the predictions refer to.
        #[arg(long, value_enum, default_value = "test")]
        split: SplitArg,
        /// Predictions files; defaults to those of every enabled approach.
        files: Vec<PathBuf>,
    },
    /// Combine all written reports into one comparison table.
    Report,
}

fn run(cli: Cli) -> Result<()> {
    let path = cli
        .config
        .ok_or_else(|| anyhow!("no config given; pass --config <FILE>"))?;
    let config = ExperimentConfig::load(&path, &cli.overrides)?;
    match cli.command {
        Command::GenData { seed } => commands::gen_data(&config, seed),
        Command::Prepare => commands::prepare(&config),
        Command::Train { approach } => {
            let approaches = commands::select_approaches(&config, &approach)?;
            commands::train(&config, &approaches)
        }
        Command::Predict { approach, split } => {
            let approaches = commands::select_approaches(&config, &approach)?;
            commands::predict(&config, &approaches, split.into())
        }
        Command::Evaluate { split, files } => commands::evaluate_files(&config, split.into(), &files),
        Command::Report => commands::report(&config),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
