use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use densify_harness::asymptote::DEFAULT_MC_SAMPLES;
use densify_harness::commands::{self, ERROR_EXIT};
use densify_harness::config::Overrides;
use densify_harness::{threads_from_env, HarnessError};

/// Dense cellular network sweeps and their asymptotes.
#[derive(Parser)]
#[command(name = "densify", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long)]
    config: PathBuf,
    /// Replaces `sweep.master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Replaces `sweep.trials`.
    #[arg(long)]
    trials: Option<usize>,
}

impl ConfigArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            trials: self.trials,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check the path loss and print the limit parameters and bounds.
    Validate(ConfigArgs),
    /// Simulate every scaling regime over the density grid.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory; defaults to `output.directory`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dense-network limit and bounds of the linear regime, as JSON.
    Asymptote {
        #[command(flatten)]
        config: ConfigArgs,
        /// Cross-check the limit by sampling the limiting SINR.
        #[arg(long)]
        mc: bool,
        #[arg(long, default_value_t = DEFAULT_MC_SAMPLES)]
        mc_samples: usize,
        /// Also write asymptote.json into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convergence verdict of a sweep CSV against an asymptote report.
    Compare {
        sweep_csv: PathBuf,
        asymptote: PathBuf,
        /// Defaults to manifest.toml beside the CSV.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<u8, HarnessError> {
    let threads = threads_from_env()?;
    let mut out = io::stdout().lock();
    let outcome = match cli.command {
        Command::Validate(c) => commands::validate(&c.config, c.overrides(), &mut out)?,
        Command::Sweep { config, out: dir } => commands::sweep(
            &config.config,
            config.overrides(),
            dir.as_deref(),
            threads,
            &mut out,
            &mut io::stderr(),
        )?,
        Command::Asymptote {
            config,
            mc,
            mc_samples,
            out: dir,
        } => commands::asymptote(
            &config.config,
            config.overrides(),
            mc.then_some(mc_samples),
            dir.as_deref(),
            threads,
            &mut out,
        )?,
        Command::Compare {
            sweep_csv,
            asymptote,
            manifest,
        } => commands::compare(&sweep_csv, &asymptote, manifest.as_deref(), &mut out)?,
    };
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(ERROR_EXIT)
        }
    }
}
