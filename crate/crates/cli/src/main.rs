//! `absa-promptkit`: ingest, split, render, predict, score and report.

mod artifacts;
mod commands;
mod config;

use std::path::PathBuf;

use absa_promptkit::pipeline::BackendSpec;
use absa_promptkit::{Regime, Task};
use anyhow::{Context as _, Result};
use clap::{Args, Parser, Subcommand};

use crate::commands::Context;
use crate::config::{ExperimentConfig, Overrides};

#[derive(Debug, Parser)]
#[command(name = "absa-promptkit", version, about = "Prompt-based ABSA experiment harness")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Experiment config (TOML)
    #[arg(long, global = true, env = "ABSA_PROMPTKIT_CONFIG")]
    config: Option<PathBuf>,
    /// Tasks to run: acd, ate, acte, tasd, apd, sc (repeatable or comma separated)
    #[arg(long = "task", global = true, value_delimiter = ',')]
    tasks: Vec<Task>,
    /// traditional, sentinel, mask or mlm
    #[arg(long, global = true)]
    regime: Option<Regime>,
    /// Train on the first N examples
    #[arg(long, global = true, value_name = "N", conflicts_with = "zero_shot")]
    few_shot: Option<usize>,
    /// Evaluate without any training split
    #[arg(long, global = true)]
    zero_shot: bool,
    /// Comma separated seed list
    #[arg(long, global = true, value_delimiter = ',')]
    seeds: Vec<u64>,
    /// gold, corrupt:<d> or http:<url> ("{seed}" in the url is substituted)
    #[arg(long, global = true)]
    backend: Option<BackendSpec>,
    /// Run directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load the corpora and write them as JSONL with statistics
    Ingest,
    /// Write the first-n (or full) training split a trainer consumes
    Split {
        /// Hold out this fraction of the split as validation data
        #[arg(long)]
        val_frac: Option<f64>,
    },
    /// Render test examples into model inputs and expected targets
    Render,
    /// Query the backend once per seed
    Predict,
    /// Parse outputs, score every task, aggregate seeds
    Score,
    /// Combine the scores of one or more runs into a table
    Report {
        /// Run directories (defaults to --out)
        #[arg(long = "run")]
        runs: Vec<PathBuf>,
    },
    /// ingest, split, render, predict, score and report, plus a manifest
    RunAll {
        #[arg(long)]
        val_frac: Option<f64>,
    },
}

fn load_config(common: CommonArgs, val_frac: Option<f64>) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(Overrides {
        tasks: common.tasks,
        regime: common.regime,
        few_shot: common.few_shot,
        zero_shot: common.zero_shot,
        val_frac,
        seeds: common.seeds,
        backend: common.backend,
        out: common.out,
    });
    if common.config.is_none() && cfg.data == config::DataPaths::default() {
        anyhow::bail!("no config given: pass --config or set ABSA_PROMPTKIT_CONFIG");
    }
    Ok(cfg)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Report { runs } => {
            let out = cli.common.out.clone().context("report needs --out")?;
            let runs = if runs.is_empty() { vec![out.clone()] } else { runs };
            print!("{}", commands::report(&runs, &out)?.to_tsv());
        }
        Command::RunAll { val_frac } => {
            let ctx = Context::new(load_config(cli.common, val_frac)?)?;
            print!("{}", commands::run_all(&ctx)?.to_tsv());
        }
        command => {
            let val_frac = match command {
                Command::Split { val_frac } => val_frac,
                _ => None,
            };
            let ctx = Context::new(load_config(cli.common, val_frac)?)?;
            match command {
                Command::Ingest => commands::ingest(&ctx)?,
                Command::Split { .. } => commands::split(&ctx)?,
                Command::Render => commands::render(&ctx)?,
                Command::Predict => commands::predict(&ctx)?,
                Command::Score => {
                    commands::score(&ctx)?;
                }
                Command::Report { .. } | Command::RunAll { .. } => unreachable!(),
            }
        }
    }
    Ok(())
}
