//! `qmap-enm`: decay rates, Markovianity verdicts and Bloch trajectories of
//! qubit dynamical maps.

mod commands;
mod config;
mod error;
mod format;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{CommandName, Flags, RunConfig};
use error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "qmap-enm", version, about = "Canonical decay rates and eternal non-Markovianity of qubit maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate canonical decay rates on a linear time grid.
    Rates,
    /// Classify the family: Markovian, (quasi-)eternal non-Markovian or not CP.
    Classify,
    /// Min Choi eigenvalue of every intermediate propagator on a time grid.
    Divisibility,
    /// Integrate the Bloch equations from an initial vector.
    Bloch,
    /// Classify every mixture on a simplex grid of weights.
    Sweep,
}

fn execute(cli: Cli) -> CliResult<()> {
    let name = match cli.command {
        Command::Rates => CommandName::Rates,
        Command::Classify => CommandName::Classify,
        Command::Divisibility => CommandName::Divisibility,
        Command::Bloch => CommandName::Bloch,
        Command::Sweep => CommandName::Sweep,
    };
    let cfg = RunConfig::resolve(name, cli.flags)?;
    let out = commands::run(&cfg)?;
    let stderr = std::io::stderr();
    let mut err = stderr.lock();
    for w in &out.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    match &cfg.output {
        Some(path) => std::fs::write(path, &out.body)
            .map_err(|e| CliError::config("output", format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(out.body.as_bytes()).and_then(|_| stdout.flush()).or_else(|e| {
                if e.kind() == std::io::ErrorKind::BrokenPipe {
                    Ok(())
                } else {
                    Err(CliError::config("output", e.to_string()))
                }
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
