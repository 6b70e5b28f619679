//! `mixprior` — induced priors of Bayesian mixture models on the command
//! line.
//!
//! Subcommands compute the prior of the number of data clusters (`kplus`),
//! conditional and weighted partition functionals (`functional`), marginal
//! cluster-size distributions (`marginal`), explicit partition probabilities
//! (`eppf`), hyperparameter and sample-size sweeps (`sweep`), and seeded
//! Monte Carlo simulation (`simulate`).
//!
//! Exit codes: 0 on success, 2 for usage errors, 3 for numeric or
//! truncation failures.

mod commands;
mod model;
mod output;

use clap::Parser;

use commands::{CliError, Command};

#[derive(Parser)]
#[command(
    name = "mixprior",
    version,
    about = "Implicit priors on data clusters and partitions induced by Bayesian mixture models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn main() {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => {}
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(3);
        }
        Err(CliError::Io(err)) => {
            eprintln!("error: {err}");
            std::process::exit(1);
        }
    }
}
