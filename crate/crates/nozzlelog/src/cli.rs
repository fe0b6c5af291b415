use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands;
use crate::config::{self, Overrides};
use crate::error::Result;

#[derive(Debug, Parser)]
#[command(name = "nozzlelog", version, about = "Nozzle-log failure pattern classification")]
pub struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic labeled dataset (manifest plus per-head logs).
    Generate(CommonArgs),
    /// Extract the feature matrix from a dataset directory.
    Features(CommonArgs),
    /// Cross-validate a model and fit it on every head.
    Evaluate(CommonArgs),
    /// Score a rule file against the dataset.
    Baseline(CommonArgs),
    /// Compare two evaluation reports class by class.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid search over hyperparameters by stratified k-fold CV.
    Tune(CommonArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dataset directory (manifest.csv, logs/, features.csv).
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Model such as `ovr-rf`, `dt`, `knn(k=3)`.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub rules: Option<PathBuf>,
    #[arg(long)]
    pub folds: Option<usize>,
    /// Class left out of the averaged scores; repeatable.
    #[arg(long = "exclude-class")]
    pub exclude_class: Vec<String>,
    /// Leave-one-out instead of k-fold.
    #[arg(long)]
    pub loocv: bool,
    /// `default` or `;`-separated parameter sets.
    #[arg(long)]
    pub grid: Option<String>,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            data: self.data.clone(),
            out: self.out.clone(),
            model: self.model.clone(),
            rules: self.rules.clone(),
            folds: self.folds,
            loocv: self.loocv,
            grid: self.grid.clone(),
            exclude: self.exclude_class.clone(),
        }
    }
}

/// Runs one command and returns its stdout summary.
pub fn run(command: &Command) -> Result<String> {
    let load = |a: &CommonArgs| config::load(a.config.as_deref(), a.overrides());
    match command {
        Command::Generate(a) => commands::generate(&load(a)?),
        Command::Features(a) => commands::features(&load(a)?),
        Command::Evaluate(a) => commands::evaluate(&load(a)?),
        Command::Baseline(a) => commands::baseline(&load(a)?),
        Command::Compare { a, b, out } => commands::compare(a, b, out.as_deref()),
        Command::Tune(a) => commands::tune(&load(a)?),
    }
}
