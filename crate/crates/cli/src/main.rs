//! Command-line driver: data generation, training, evaluation, cross-dataset
//! runs, evasion campaigns, ablation sweeps, gradient checks, and embedding
//! export, all from one declarative TOML config.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
    #[error(transparent)]
    Core(#[from] tabcl::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Runtime(_) => "runtime",
            CliError::Core(tabcl::Error::Config(_)) => "config",
            CliError::Core(tabcl::Error::Data(_)) => "data",
            CliError::Core(tabcl::Error::Dimension { .. }) => "dimension",
            CliError::Core(tabcl::Error::Parse { .. }) => "parse",
            CliError::Core(_) => "io",
        }
    }

    fn exit_code(&self) -> u8 {
        match self.kind() {
            "config" | "parse" => 2,
            _ => 1,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "tabcl",
    version,
    about = "Contrastive representation learning for tabular account data"
)]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Dotted-path config override, e.g. --set train.epochs=1000 (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Global seed; every random stream derives from it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for reports and artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Zero wall-clock fields in reports so identical runs are byte-identical.
    #[arg(long, global = true)]
    normalized: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labeled dataset (and optionally its shifted
    /// partner for cross-dataset runs).
    GenData,
    /// Contrastive-train on the training split and write a checkpoint.
    Train,
    /// Fit the linear probe on frozen embeddings and score the test split.
    Eval,
    /// Train on one dataset, evaluate on the other, both directions.
    Lobo,
    /// Run the black-box evasion campaign against the frozen pipeline.
    Attack,
    /// Train+eval across one ablation axis from the sweep lists.
    Sweep {
        /// Which hyperparameter to sweep.
        #[arg(long, value_enum)]
        axis: commands::SweepAxis,
    },
    /// Verify analytic gradients against central finite differences.
    Gradcheck,
    /// Write frozen encoder outputs for the dataset as CSV.
    ExportEmbeddings,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: String,
    kind: &'a str,
}

fn run(cli: &Cli) -> Result<ExitCode, CliError> {
    let config = config::load_config(
        cli.config.as_deref(),
        &cli.set,
        cli.seed,
        cli.out.as_deref(),
    )?;
    let path = match &cli.command {
        Command::GenData => commands::gen_data(&config)?,
        Command::Train => commands::train(&config, cli.normalized)?,
        Command::Eval => commands::eval(&config)?,
        Command::Lobo => commands::run_lobo(&config)?,
        Command::Attack => commands::attack(&config, cli.normalized)?,
        Command::Sweep { axis } => commands::sweep(&config, *axis)?,
        Command::Gradcheck => {
            let (path, passed) = commands::gradcheck(&config)?;
            println!("{}", path.display());
            return Ok(if passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("gradient check failed; see report");
                ExitCode::from(1)
            });
        }
        Command::ExportEmbeddings => commands::export_embeddings(&config)?,
    };
    println!("{}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            let report = ErrorReport {
                error: err.to_string(),
                kind: err.kind(),
            };
            eprintln!(
                "{}",
                serde_json::to_string(&report).unwrap_or_else(|_| err.to_string())
            );
            ExitCode::from(err.exit_code())
        }
    }
}
