use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qcbe_core::experiment::{self, ExperimentConfig};
use qcbe_core::Error;

/// Physics checks failed (oracle disagreement, wrap violation, gate bound).
const EXIT_PHYSICS: u8 = 2;
/// Bad arguments, unreadable or invalid configuration, I/O failure.
const EXIT_USAGE: u8 = 1;

#[derive(Parser)]
#[command(
    name = "qcbe",
    version,
    about = "Quantum reservoir-method Vlasov-Poisson experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a key = value config file.
    Run {
        config: PathBuf,
        /// Artifact directory; defaults to the config's `output` or `runs/<experiment>`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `rng_seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Summarize a finished run directory.
    Report { run_dir: PathBuf },
}

fn exit_code(e: &Error) -> ExitCode {
    ExitCode::from(if e.is_physics() {
        EXIT_PHYSICS
    } else {
        EXIT_USAGE
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, seed } => {
            let text = match fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", config.display());
                    return ExitCode::from(EXIT_USAGE);
                }
            };
            let mut cfg = match ExperimentConfig::parse(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {}: {e}", config.display());
                    return ExitCode::from(EXIT_USAGE);
                }
            };
            if let Some(seed) = seed {
                cfg.rng_seed = seed;
            }
            let out = out
                .or_else(|| cfg.output.clone())
                .unwrap_or_else(|| PathBuf::from("runs").join(cfg.experiment.label()));
            log::info!("running {} into {}", cfg.experiment.label(), out.display());
            match experiment::run(&cfg, &out) {
                Ok(_) => match experiment::report(&out) {
                    Ok(text) => {
                        print!("{text}");
                        ExitCode::SUCCESS
                    }
                    Err(e) => {
                        eprintln!("error: {e}");
                        exit_code(&e)
                    }
                },
                Err(e) => {
                    eprintln!("error: {e} (partial artifacts in {})", out.display());
                    exit_code(&e)
                }
            }
        }
        Command::Report { run_dir } => match experiment::report(&run_dir) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {}: {e}", run_dir.display());
                ExitCode::from(EXIT_USAGE)
            }
        },
    }
}
