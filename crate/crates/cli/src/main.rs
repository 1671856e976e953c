use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use colony_cli::commands::{self, OutDir};
use colony_cli::config::RunConfig;
use colony_cli::CliError;

/// Honey-bee colony size: stationary laws, seasonal profiles and simulation.
#[derive(Debug, Parser)]
#[command(name = "colony", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Replace the seed given in the config.
    #[arg(long, global = true)]
    seed_override: Option<u64>,
    /// Worker threads for ensembles (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Stationary mean, variance and PMF of a homogeneous model.
    Stationary,
    /// Stationary mean profile over the cycle of a seasonal model.
    Cyclic,
    /// Monte Carlo ensemble with traces and per-day summaries.
    Simulate,
    /// Extinction probability over a sweep of daily hatch means.
    Extinction,
    /// Oracle cross-checks; exits 1 if any fails.
    Validate,
    /// Tabulate continuous lifetime densities.
    Density,
}

fn run(cli: &Cli) -> Result<String, CliError> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let config = cli.config.as_deref().map(RunConfig::load).transpose()?;
    let out = OutDir::create(&cli.out_dir)?;
    if let Command::Validate = cli.command {
        return commands::validate(config.as_ref(), &out, cli.seed_override);
    }
    let config = config.ok_or_else(|| CliError::Config("--config is required".into()))?;
    match cli.command {
        Command::Stationary => commands::stationary(&config, &out),
        Command::Cyclic => commands::cyclic(&config, &out),
        Command::Simulate => commands::simulate(&config, &out, cli.seed_override),
        Command::Extinction => commands::extinction(&config, &out, cli.seed_override),
        Command::Density => commands::density(&config, &out),
        Command::Validate => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
