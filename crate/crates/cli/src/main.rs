use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde_json::Value;
use zenoblock::experiments::{self, Experiment, ExperimentConfig};
use zenoblock::parallel::configure_threads;
use zenoblock::Error;

/// Worker-thread count for independent runs; defaults to all cores.
const THREADS_ENV: &str = "ZENOBLOCK_THREADS";

#[derive(Parser)]
#[command(name = "zenoblock", version, about = "Ground-state blockade experiments: presets, sweeps and model checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named preset.
    Run {
        /// table1, fig2, fig3, fig4, fig6, fig7a, fig7b, expt-2atom-sap, expt-feedback
        experiment: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Sweep one or two parameters over a grid.
    Sweep {
        /// Axis as key=start:stop:count; at most two.
        #[arg(long = "grid", value_name = "AXIS")]
        grid: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the model-equivalence and invariant checks.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// List experiment names.
    List,
}

#[derive(Args)]
struct Common {
    /// Parameter override, key=value (value parsed as JSON when possible).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (default runs/<experiment>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output samples per curve.
    #[arg(long)]
    samples: Option<usize>,
    /// JSON config; command-line options take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn parse_set(s: &str) -> Result<(String, Value), Error> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::Usage(format!("--set expects key=value, got `{s}`")))?;
    let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_owned()));
    Ok((k.trim().to_owned(), value))
}

fn build_config(experiment: &str, common: Common, grid: Vec<String>) -> anyhow::Result<ExperimentConfig> {
    let base = match &common.config {
        Some(path) => ExperimentConfig::from_json_file(path).with_context(|| format!("reading {}", path.display()))?,
        None => ExperimentConfig::default(),
    };
    let mut cli = ExperimentConfig::new(experiment);
    for s in &common.set {
        let (k, v) = parse_set(s)?;
        cli.overrides.insert(k, v);
    }
    cli.out_dir = common.out;
    cli.samples = common.samples;
    cli.grid = grid;
    let cfg = base.merged(cli);
    if cfg.experiment.is_empty() {
        return Err(Error::Usage(format!("no experiment given; valid names: {}", Experiment::names().join(", "))).into());
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    let cfg = match cli.command {
        Command::List => {
            for n in Experiment::names() {
                println!("{n}");
            }
            return Ok(());
        }
        Command::Run { experiment, common } => build_config(experiment.as_deref().unwrap_or(""), common, Vec::new())?,
        Command::Sweep { grid, common } => build_config("sweep", common, grid)?,
        Command::Validate { common } => build_config("validate", common, Vec::new())?,
    };
    // surface a bad name before any work
    cfg.experiment()?;
    let dir = cfg.output_dir();
    let result = experiments::run(&cfg);
    if let Ok(text) = std::fs::read_to_string(dir.join("summary.json")) {
        print!("{text}");
    }
    let manifest = result?;
    eprintln!(
        "{}: {} files in {} ({:.2} s)",
        manifest.experiment,
        manifest.artifacts.len() + 1,
        dir.display(),
        manifest.duration_seconds
    );
    Ok(())
}

fn main() -> ExitCode {
    let threads = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok());
    configure_threads(threads);
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Error>() {
                Some(Error::Usage(_)) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
