//! `aabc`: build pools, run ABC/AABC inference and accuracy studies.

mod commands;
mod config;
mod failure;
mod plotdata;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::failure::{CliResult, Context, Failure};

#[derive(Parser)]
#[command(name = "aabc", version, about = "Approximate ABC for limited-generative models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads; defaults to all cores. Results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct Configured {
    /// TOML config, or the manifest.json of an earlier run.
    #[arg(long)]
    config: PathBuf,
    /// Root seed; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a pool of m realizations and store it.
    BuildPool(Configured),
    /// Run ABC, AABC or the parameter-only variant on one observed data set.
    Infer(Configured),
    /// Replicate study: RMSE and percent excess over test sets.
    Study(Configured),
    /// Turn a posterior.csv or report.csv into plotting tables.
    ExportPlotdata {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 40)]
        bins: usize,
        #[command(flatten)]
        common: Common,
    },
}

fn prepare(common: &Common) -> CliResult<Option<rayon::ThreadPool>> {
    std::fs::create_dir_all(&common.out).io_ctx(format!("creating {}", common.out.display()))?;
    match common.workers {
        None => Ok(None),
        Some(0) => Err(Failure::Config("--workers must be at least 1".into())),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map(Some)
            .map_err(|e| Failure::Other(e.to_string())),
    }
}

fn in_pool<T: Send>(pool: Option<rayon::ThreadPool>, f: impl FnOnce() -> T + Send) -> T {
    match pool {
        Some(p) => p.install(f),
        None => f(),
    }
}

fn with_config(
    args: &Configured,
    run: fn(&RunConfig, &Path) -> CliResult<()>,
) -> CliResult<()> {
    let mut config = RunConfig::load(&args.config)?;
    if args.seed.is_some() {
        config.seed = args.seed;
    }
    let pool = prepare(&args.common)?;
    in_pool(pool, || run(&config, &args.common.out))
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::BuildPool(a) => with_config(&a, commands::build_pool),
        Command::Infer(a) => with_config(&a, commands::infer),
        Command::Study(a) => with_config(&a, commands::study),
        Command::ExportPlotdata { input, bins, common } => {
            let pool = prepare(&common)?;
            in_pool(pool, || plotdata::export(&input, bins, &common.out))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("aabc: {e}");
            e.exit_code()
        }
    }
}
