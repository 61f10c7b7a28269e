//! `miw`: solve, verify and analyse many-interacting-worlds configurations.
//!
//! Exit codes: 0 ok, 1 solver or I/O failure, 2 usage, 3 schema violation,
//! 4 invariant failure, 5 missing dependency.

mod cache;
mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::cache::{default_dir, SolutionCache};
use crate::commands::{Context, OuArgs};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "miw",
    version,
    about = "Many-interacting-worlds ground states and diagnostics"
)]
struct Cli {
    /// Omit run metadata (timings, version) so outputs are byte-comparable.
    #[arg(long, global = true)]
    stable_output: bool,
    /// Emit CSV instead of JSON.
    #[arg(long, global = true)]
    csv: bool,
    /// Solution cache directory.
    #[arg(long, global = true, env = "MIW_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
    /// Neither read nor write the solution cache.
    #[arg(long, global = true)]
    no_cache: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for the ground state of N worlds and print its document.
    Solve {
        #[arg(long)]
        n: usize,
        /// Significant decimal digits of working precision.
        #[arg(long)]
        precision: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the structural identities and the Hamiltonian of a document.
    Verify {
        file: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Zero-bias density, identities and coupling masses.
    Density {
        file: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Distances to the normal law and to the zero-bias density.
    Distance {
        file: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Largest zeros a_k of x_k and b_k of S_k for k up to ceil(N/2).
    Roots {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        precision: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve (or load) several N and tabulate properties and distances.
    Sweep {
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        precision: Option<u32>,
        /// Fail instead of solving when a configuration is not cached.
        #[arg(long)]
        no_solve: bool,
    },
    /// Random single replacement chain and its Ornstein-Uhlenbeck statistics.
    Ou {
        /// Draw from the standard normal.
        #[arg(long, conflicts_with = "n", required_unless_present = "n")]
        normal: bool,
        /// Draw from the ground state of N worlds.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
        lags: Vec<f64>,
        #[arg(long)]
        precision: Option<u32>,
        #[arg(long)]
        no_solve: bool,
        /// Also write every path as CSV (rep, k, t, Y, Xbar).
        #[arg(long)]
        paths: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cache = if cli.no_cache {
        SolutionCache::disabled()
    } else {
        SolutionCache::new(default_dir(cli.cache_dir.as_deref()))
    };
    let ctx = Context {
        stable: cli.stable_output,
        csv: cli.csv,
        cache,
        started: Instant::now(),
    };
    match cli.command {
        Command::Solve { n, precision, out } => commands::solve(&ctx, n, precision, out.as_deref()),
        Command::Verify { file, tol, out } => commands::verify(&ctx, &file, tol, out.as_deref()),
        Command::Density { file, tol, out } => commands::density(&ctx, &file, tol, out.as_deref()),
        Command::Distance { file, tol, out } => {
            commands::distance(&ctx, &file, tol, out.as_deref())
        }
        Command::Roots { n, precision, out } => commands::roots(&ctx, n, precision, out.as_deref()),
        Command::Sweep {
            n_list,
            out_dir,
            precision,
            no_solve,
        } => commands::sweep(&ctx, &n_list, &out_dir, precision, no_solve),
        Command::Ou {
            normal,
            n,
            m,
            t,
            reps,
            seed,
            lags,
            precision,
            no_solve,
            paths,
            out,
        } => commands::ou(
            &ctx,
            &OuArgs {
                normal,
                n,
                m,
                t,
                reps,
                seed,
                lags,
                precision,
                no_solve,
                paths,
                out,
            },
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.render().to_string();
            let err = CliError::Usage(
                message
                    .lines()
                    .next()
                    .unwrap_or_default()
                    .trim_start_matches("error: ")
                    .to_string(),
            );
            eprintln!("{}", err.to_json());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
