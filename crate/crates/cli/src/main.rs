use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use funcsel_cli::commands;
use funcsel_cli::config::{ExperimentConfig, Overrides};
use funcsel_cli::{configure_threads, CliResult};
use funcsel_core::selector::Criterion;

#[derive(Parser)]
#[command(name = "funcsel", version, about = "Sparse Bayesian functional deep network experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset and its ground truth from the configured scenario.
    Simulate(Common),
    /// Run projection-size selection and write the selection and model.
    Fit(Common),
    /// Score the fitted model on the test split.
    Evaluate(Common),
    /// Run simulate, fit and evaluate for every replicate and summarize.
    Reproduce(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum CriterionArg {
    Evidence,
    Val,
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    criterion: Option<CriterionArg>,
    /// Candidate projection sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    j: Option<Vec<usize>>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    replicates: Option<usize>,
}

fn run(cli: Cli) -> CliResult<Vec<PathBuf>> {
    configure_threads()?;
    let (common, f): (&Common, fn(&ExperimentConfig) -> CliResult<Vec<PathBuf>>) = match &cli.command {
        Command::Simulate(c) => (c, commands::cmd_simulate),
        Command::Fit(c) => (c, commands::cmd_fit),
        Command::Evaluate(c) => (c, commands::cmd_evaluate),
        Command::Reproduce(c) => (c, commands::cmd_reproduce),
    };
    let mut config = ExperimentConfig::load(&common.config)?;
    config.apply(&Overrides {
        seed: common.seed,
        criterion: common.criterion.map(|c| match c {
            CriterionArg::Evidence => Criterion::Evidence,
            CriterionArg::Val => Criterion::Val,
        }),
        j_candidates: common.j.clone(),
        output_dir: common.out.clone(),
        replicates: common.replicates,
    });
    f(&config)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
