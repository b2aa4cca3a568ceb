use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sansolve_cli::commands::{cmd_fetch, cmd_grid, cmd_rate, cmd_run, CommonArgs};
use sansolve_cli::config::ExperimentConfig;
use sansolve_cli::CliError;

/// Incremental stochastic Newton solvers for regularized GLMs:
/// experiment runner, hyperparameter grids and rate reports.
#[derive(Parser)]
#[command(name = "sansolve", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment manifest.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSVs (default: config's out_dir or `results`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory holding LibSVM files (default: $SANSOLVE_DATA_DIR or `data`).
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Parallel (solver, seed) runs; 0 means one thread per core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Override the config's first seed.
    #[arg(long)]
    seed_base: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured (solver, seed) pair and write trace CSVs.
    Run(RunArgs),
    /// Sweep hyperparameters and write the mean-passes grid CSV.
    Grid(RunArgs),
    /// Contraction-rate experiment on an SPD quadratic.
    Rate(RunArgs),
    /// Download LibSVM datasets into the data directory.
    FetchData {
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// Dataset names (default: mushrooms phishing).
        names: Vec<String>,
    },
}

fn data_dir_or_default(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("SANSOLVE_DATA_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("data"))
}

fn common(args: &RunArgs, cfg: &ExperimentConfig) -> CommonArgs {
    let out_dir = args
        .out
        .clone()
        .or_else(|| cfg.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"));
    CommonArgs {
        out_dir,
        data_dir: data_dir_or_default(args.data_dir.clone()),
        jobs: if args.jobs == 0 { None } else { Some(args.jobs) },
        seed_base: args.seed_base,
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => {
            let cfg = ExperimentConfig::from_path(&args.config)?;
            cmd_run(&cfg, &common(&args, &cfg))
        }
        Command::Grid(args) => {
            let cfg = ExperimentConfig::from_path(&args.config)?;
            cmd_grid(&cfg, &common(&args, &cfg))
        }
        Command::Rate(args) => {
            let cfg = ExperimentConfig::from_path(&args.config)?;
            cmd_rate(&cfg, &common(&args, &cfg))
        }
        Command::FetchData { data_dir, names } => {
            cmd_fetch(&data_dir_or_default(data_dir), &names)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
