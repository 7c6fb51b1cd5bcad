mod args;
mod commands;
mod error;
mod io;

use std::process::ExitCode;

use clap::Parser;
use log::LevelFilter;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.quiet {
            LevelFilter::Error
        } else {
            LevelFilter::Warn
        })
        .format_timestamp(None)
        .format_target(false)
        .init();

    let result = match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Deconvolve(a) => commands::deconvolve(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Derank(a) => commands::derank(a),
        Command::Plot(a) => commands::plot(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code())
        }
    }
}
