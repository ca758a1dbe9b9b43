//! Command-line front end for data-driven prediction on LTI systems.
//!
//! Exit codes: 0 when the command completes and its verdict holds, 1 when it
//! completes and the verdict fails (prediction not established, property does
//! not hold, reproduction mismatch), 2 for usage, parse, or dimension errors.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand};

use commands::{CheckMode, Scenario};

#[derive(Parser)]
#[command(
    name = "hankelcast",
    version,
    about = "Predict the future outputs of an unknown LTI system straight from recorded trajectories"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a system file on an input trajectory file, printing the full
    /// trajectory as CSV.
    Simulate {
        /// System description file.
        system: PathBuf,
        /// Trajectory file supplying the inputs (u columns are used).
        input: PathBuf,
        /// Comma-separated initial state; defaults to the origin.
        #[arg(long)]
        x0: Option<String>,
    },
    /// Predict future outputs from a recorded trajectory and a recent
    /// history, printing them as CSV followed by diagnostics.
    Predict {
        /// Recorded input/output trajectory file.
        data: PathBuf,
        /// Recent input/output history leading up to the horizon.
        ini: PathBuf,
        /// Future inputs over the horizon (outputs in the file are ignored).
        future: PathBuf,
        /// Upper bound on the lag of the system behind the record.
        #[arg(long)]
        lag: usize,
        /// Predict one step at a time, growing the history, instead of
        /// solving the whole horizon at once.
        #[arg(long)]
        weave: bool,
        /// Relative residual above which a window is infeasible
        /// (default 1e-8, env HANKELCAST_RESIDUAL_TOL).
        #[arg(long)]
        residual_tol: Option<f64>,
        /// Relative singular-value cutoff for rank decisions
        /// (default 1e-10, env HANKELCAST_RANK_TOL).
        #[arg(long)]
        rank_tol: Option<f64>,
    },
    /// Check one property of a trajectory or system file.
    #[command(group(
        ArgGroup::new("property")
            .required(true)
            .args(["pe_order", "lag", "unique_continuation"])
    ))]
    Check {
        /// Trajectory file for --pe-order, system file otherwise.
        file: PathBuf,
        /// Is the input persistently exciting of this order?
        #[arg(long, value_name = "ORDER")]
        pe_order: Option<usize>,
        /// Lag of the system: the depth where observability ranks stabilize.
        #[arg(long)]
        lag: bool,
        /// Does a T_INI-sample history pin down the next T_F outputs?
        #[arg(long, num_args = 2, value_names = ["T_INI", "T_F"])]
        unique_continuation: Option<Vec<usize>>,
        /// Relative singular-value cutoff for rank decisions
        /// (default 1e-10, env HANKELCAST_RANK_TOL).
        #[arg(long)]
        rank_tol: Option<f64>,
    },
    /// Print the depth-k block Hankel matrix of a trajectory file as CSV
    /// (inputs stacked over outputs per sample).
    Hankel {
        /// Trajectory file.
        file: PathBuf,
        /// Window depth k (block rows); void windows print nothing.
        #[arg(long)]
        depth: usize,
    },
    /// Re-run a built-in worked scenario, print expected vs computed values,
    /// and exit 0 only if they agree.
    Reproduce {
        /// Scenario id.
        #[arg(value_enum)]
        id: Scenario,
        /// Seed for the regenerated record (sec5 only; printed in the output).
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { system, input, x0 } => {
            commands::cmd_simulate(&system, &input, x0.as_deref())
        }
        Command::Predict {
            data,
            ini,
            future,
            lag,
            weave,
            residual_tol,
            rank_tol,
        } => commands::cmd_predict(&data, &ini, &future, lag, weave, residual_tol, rank_tol),
        Command::Check {
            file,
            pe_order,
            lag,
            unique_continuation,
            rank_tol,
        } => {
            let mode = if let Some(order) = pe_order {
                CheckMode::PeOrder(order)
            } else if lag {
                CheckMode::Lag
            } else {
                let pair = unique_continuation.expect("the argument group requires one property");
                CheckMode::UniqueContinuation(pair[0], pair[1])
            };
            commands::cmd_check(&file, mode, rank_tol)
        }
        Command::Hankel { file, depth } => commands::cmd_hankel(&file, depth),
        Command::Reproduce { id, seed } => commands::cmd_reproduce(id, seed),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
