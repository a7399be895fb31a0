//! Command-line interface.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{self, Context};
use crate::config::PipelineConfig;
use crate::error::{AppError, AppResult};

#[derive(Debug, Parser)]
#[command(name = "fakestar", version, about = "Detect fake-star campaigns in GitHub event archives")]
pub struct Cli {
    /// Pipeline configuration (TOML); defaults apply when absent.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `run.out_dir`.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads; overrides `run.threads`.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Also write plot-ready tables under `<out>/plot_data`.
    #[arg(long, global = true)]
    pub plot_data: bool,
    /// Print the effective configuration as TOML and exit.
    #[arg(long)]
    pub print_config: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Parse event archives into the output directory.
    Ingest,
    /// Run both fake-star signatures and write the merged ledger.
    Detect,
    /// Identify campaign repositories from the ledger.
    Campaigns,
    /// Generate a synthetic scenario with planted campaigns.
    Synth,
    /// Score detections against synthetic ground truth.
    Evaluate,
    /// Prevalence, activity clustering and name tokens.
    Measure,
    /// Build the campaign-repository panel and fit fixed-effects AR models.
    Regress,
    /// Deletion ratios and cross-references from external snapshots.
    Enrich,
    /// Summarize the run.
    Report,
}

impl Cli {
    pub fn context(&self) -> AppResult<Context> {
        let mut config = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(out) = &self.out {
            config.run.out_dir = out.clone();
        }
        if let Some(t) = self.threads {
            config.run.threads = t;
        }
        Ok(Context::new(config, self.plot_data))
    }
}

/// Parses arguments and runs one subcommand.
pub fn run(cli: &Cli) -> AppResult<()> {
    let ctx = cli.context()?;
    if cli.print_config {
        print!("{}", ctx.config.to_toml());
        return Ok(());
    }
    let Some(command) = cli.command else {
        return Err(AppError::Config("no subcommand given; see --help".into()));
    };
    commands::dispatch(&ctx, command)
}
