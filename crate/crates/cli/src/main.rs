use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hotion_cli::commands::{self, Output, RunOptions};
use hotion_cli::{CliError, ExperimentConfig, Format, THREADS_ENV};

#[derive(Parser)]
#[command(name = "hotion", version, about = "Hot-ion CROT gate simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the gate on the configured phonon input and write a JSON report.
    TruthTable(Common),
    /// Run the gate over a grid of parameters and write one CSV row per point.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Append a wall-clock runtime column.
        #[arg(long)]
        timing: bool,
    },
    /// Write the population time series of one STIRAP block.
    StirapTrace(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output file (defaults to output.path in the config, then stdout).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Seed for `random` phonon states without their own seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let (common, timing) = match &cli.command {
        Command::TruthTable(c) | Command::StirapTrace(c) => (c, false),
        Command::Sweep { common, timing } => (common, *timing),
    };
    let config = ExperimentConfig::load(&common.config)?;
    let opts = RunOptions { format: common.format.map(Format::from), seed: common.seed, timing };
    let Output { document, summary } = match cli.command {
        Command::TruthTable(_) => commands::truth_table(&config, &opts)?,
        Command::Sweep { .. } => commands::sweep(&config, &opts)?,
        Command::StirapTrace(_) => commands::stirap_trace(&config, &opts)?,
    };
    match common.out.clone().or_else(|| config.output.path.clone()) {
        Some(path) => {
            std::fs::write(&path, document).map_err(|source| CliError::Io { path, source })?;
            for line in summary {
                println!("{line}");
            }
        }
        None => {
            print!("{document}");
            for line in summary {
                eprintln!("{line}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
