use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mnr_cli::commands;
use mnr_cli::config::RunConfig;
use mnr_cli::error::CliError;

/// Regression with errors on both variables and intrinsic scatter.
#[derive(Parser)]
#[command(name = "mnr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Maximum-likelihood fit; writes fit.json.
    Fit(Common),
    /// Posterior sampling; writes chains.csv and summary.json.
    Sample(Common),
    /// Bias of each method on mock data; writes bias.csv and bias.json.
    BiasBench(Common),
    /// Compare residual correlations of y(x) and x(y) fits; writes
    /// causality.json and residual tables.
    AssessCausality(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        Ok(cfg)
    }
}

type Runner = fn(&RunConfig) -> Result<String, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, run): (&Common, Runner) = match &cli.command {
        Command::Fit(a) => (a, commands::cmd_fit),
        Command::Sample(a) => (a, commands::cmd_sample),
        Command::BiasBench(a) => (a, commands::cmd_bias_bench),
        Command::AssessCausality(a) => (a, commands::cmd_assess_causality),
    };
    match args.load().and_then(|cfg| run(&cfg)) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
