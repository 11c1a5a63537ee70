//! `ddce`: datasets, training, Monte-Carlo evaluation, complexity counts and
//! plots for the doubly-dispersive channel estimators.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ddce_core::Error;

#[derive(Parser, Debug)]
#[command(
    name = "ddce",
    version,
    about = "Doubly-dispersive channel estimation workbench"
)]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Scenario TOML file.
    pub config: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the frames per SNR point.
    #[arg(long)]
    pub frames: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (0: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Channel coding scheme. Reserved; BER is uncoded.
    #[arg(long)]
    pub coding: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate training datasets for the scenario's learned estimators.
    Dataset {
        #[command(flatten)]
        common: Common,
        /// Pipelines to generate (default: the scenario's learned estimators).
        #[arg(long = "pipeline")]
        pipelines: Vec<String>,
        /// Overrides `train.samples`.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Train networks from datasets, generating missing ones.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long = "pipeline")]
        pipelines: Vec<String>,
        #[arg(long)]
        samples: Option<usize>,
        /// Dataset directory.
        #[arg(long, default_value = "data")]
        data: PathBuf,
    },
    /// Monte-Carlo BER/NMSE with trained networks; writes results.csv and plots.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Overrides `models_dir`.
        #[arg(long)]
        models: Option<PathBuf>,
    },
    /// Train whatever is missing, then evaluate.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        models: Option<PathBuf>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Real-valued operation counts per frame.
    Complexity {
        #[command(flatten)]
        common: Common,
        /// Estimators to count (default: every estimator in the bar figures).
        #[arg(long = "estimator")]
        estimators: Vec<String>,
        /// TOML or JSON file of cost parameters; unset ones take defaults.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Also write the bar-chart SVG.
        #[arg(long)]
        figure: bool,
    },
    /// Redraw BER and NMSE plots from a results CSV.
    Plot {
        #[command(flatten)]
        common: Common,
        /// Results CSV (default: `<out>/results.csv`).
        #[arg(long)]
        results: Option<PathBuf>,
        #[arg(long)]
        title: Option<String>,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::Io { .. }) => 3,
        Some(Error::Config(_) | Error::Shape(_) | Error::Unimplemented(_)) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "info",
        1 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let result = match cli.command {
        Command::Dataset {
            common,
            pipelines,
            samples,
        } => commands::dataset(&common, &pipelines, samples),
        Command::Train {
            common,
            pipelines,
            samples,
            data,
        } => commands::train(&common, &pipelines, samples, &data),
        Command::Evaluate { common, models } => commands::evaluate(&common, models),
        Command::Simulate {
            common,
            models,
            samples,
        } => commands::simulate(&common, models, samples),
        Command::Complexity {
            common,
            estimators,
            params,
            format,
            figure,
        } => commands::complexity(&common, &estimators, params.as_deref(), format, figure),
        Command::Plot {
            common,
            results,
            title,
        } => commands::plot(&common, results, title),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
