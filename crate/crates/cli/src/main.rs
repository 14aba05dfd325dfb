//! `scarkit`: analyze frequency specs, list oscillator levels, run `ħ`
//! sweeps of scarred eigenstates and dump Husimi grids.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use scarkit::Error;

#[derive(Parser)]
#[command(name = "scarkit", version, about = "Scarred eigenstates of harmonic oscillators")]
struct Cli {
    /// Output directory, overriding the config's `out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the parallel stages.
    #[arg(long, global = true, env = "SCARKIT_THREADS")]
    threads: Option<usize>,
    /// Seed for the default probe characters, overriding the config's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the periodic decomposition of a frequency spec.
    Analyze { spec: PathBuf },
    /// Run the `ħ` sweep described by a config file.
    Sweep { config: PathBuf },
    /// Write the Husimi marginal of one mode on a grid.
    Husimi {
        config: PathBuf,
        /// Mode index, starting at 1.
        #[arg(long, default_value_t = 1)]
        mode: usize,
        /// Use a state saved by `sweep` instead of building one.
        #[arg(long)]
        state: Option<PathBuf>,
    },
    /// List eigenvalues of the oscillator in a window with their eigenspaces.
    Levels {
        spec: PathBuf,
        #[arg(long)]
        hbar: f64,
        #[arg(long)]
        lo: f64,
        #[arg(long)]
        hi: f64,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } | Error::Validation(_) | Error::Domain(_) | Error::Io(_) => 2,
        Error::NotInSigma(_) => 3,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<String, Error> {
    match cli.command {
        Command::Analyze { spec } => commands::analyze(&spec),
        Command::Sweep { config } => commands::run_sweep(&config, cli.out, cli.seed),
        Command::Husimi { config, mode, state } => {
            commands::run_husimi(&config, mode, state.as_deref(), cli.out)
        }
        Command::Levels { spec, hbar, lo, hi } => {
            let csv = commands::levels(&spec, hbar, lo, hi)?;
            match cli.out {
                Some(dir) => {
                    let path = commands::write_levels(&dir, &csv)?;
                    Ok(format!("wrote {}\n", path.display()))
                }
                None => Ok(csv),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
