//! `corrfit`: fit correlation matrices, classify moment pairs and run the
//! reproducible experiments.
//!
//! Exit codes: 0 success, 2 bad input, 3 solver failure, 4 bad flags,
//! 5 degree not certifiable.

mod commands;
mod error;
mod io;
mod report;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use commands::{classify, degrees, experiment, fit};
use error::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "corrfit", version, about = "Correlation matrix estimation under entropy, Stein and symmetrized Stein losses")]
struct Cli {
    /// Print errors as a JSON object on standard error.
    #[arg(long, global = true)]
    json_errors: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate a correlation matrix from a data matrix.
    Fit(fit::FitArgs),
    /// Region, discriminant and critical point count of a moment pair.
    Classify(classify::ClassifyArgs),
    /// Census and Monte Carlo experiments, as CSV.
    #[command(subcommand)]
    Experiment(experiment::ExperimentCommand),
    /// Certified algebraic degrees of the critical equations.
    Degrees(degrees::DegreesArgs),
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Fit(a) => fit::run(a),
        Command::Classify(a) => classify::run(a),
        Command::Experiment(c) => experiment::run(c),
        Command::Degrees(a) => degrees::run(a),
    }
}

fn report(err: &CliError, json: bool) -> ExitCode {
    if json {
        eprintln!("{}", err.to_json());
    } else {
        eprintln!("corrfit: {err}");
    }
    ExitCode::from(err.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            // the flag may not have been parsed, so look for it directly
            let json = std::env::args().any(|a| a == "--json-errors");
            if json {
                return report(&CliError::BadFlags(e.render().to_string().trim().to_string()), true);
            }
            let _ = e.print();
            return ExitCode::from(CliError::BadFlags(String::new()).exit_code());
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e, cli.json_errors),
    }
}
