#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod output;
mod plot;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::Status;

fn run(cli: Cli) -> anyhow::Result<Status> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match &cli.command {
        Command::ListSystems(a) => commands::list_systems(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Certify(a) => commands::certify(a),
        Command::Tconv(a) => commands::tconv(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Envelope(a) => commands::envelope_cmd(a),
        Command::Barbalat(a) => commands::barbalat(a),
        Command::Adaptive(a) => commands::adaptive(a),
    }
}

/// 0: ran and every check passed; 1: ran, some check failed (report still
/// written); 2: usage or configuration error.
fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
