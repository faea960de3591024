//! `silly-rules`: solver, simulator, sweeps and numerical checks.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::Parser;

use commands::{Cli, Failure};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(Failure::Validation.code()),
            };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new().filter_level(level).parse_env("SILLY_RULES_LOG").init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let failure = Failure::classify(&e);
            eprintln!("error: {e:#}");
            ExitCode::from(failure.code())
        }
    }
}
