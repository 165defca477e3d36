use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;
use shockint_cli::config::RunConfig;
use shockint_cli::run::{check, run, RunOptions};
use shockint_cli::CliError;

#[derive(Parser)]
#[command(
    name = "shockint",
    version,
    about = "Local solution of two colliding shocks in barotropic flow"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve, verify and export.
    Run {
        config: PathBuf,
        /// Output directory, overriding the configuration.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Halve epsilon until the iteration succeeds.
        #[arg(long)]
        auto_eps: bool,
        /// Additional grid doublings for the refinement study.
        #[arg(long, default_value_t = 0)]
        refine: usize,
        /// Print report.json to standard output.
        #[arg(long)]
        print_report: bool,
    },
    /// Solve for the interaction point and check determinism only.
    Check { config: PathBuf },
}

fn threads() -> Result<Option<usize>, CliError> {
    match std::env::var("SHOCKINT_THREADS") {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!(
                "SHOCKINT_THREADS must be a positive integer, got {s:?}"
            ))),
        },
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config,
            out,
            auto_eps,
            refine,
            print_report,
        } => {
            let cfg = RunConfig::load(&config)?;
            let outcome = run(&cfg, &RunOptions { out, auto_eps, refine })?;
            if print_report {
                println!("{}", outcome.report_json);
            }
        }
        Command::Check { config } => {
            let cfg = RunConfig::load(&config)?;
            let report = check(&cfg)?;
            let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
            println!("{json}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = threads().and_then(|n| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = n {
            builder = builder.num_threads(n);
        }
        let pool = builder.build().map_err(|e| CliError::Config(e.to_string()))?;
        pool.install(|| execute(cli))
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
