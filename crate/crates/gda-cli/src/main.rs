mod args;
mod commands;
mod common;
mod config;
mod error;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::common::Ctx;
use crate::error::CliResult;

fn dispatch(cli: Cli) -> CliResult<()> {
    let ctx = Ctx::prepare(&cli.global)?;
    match cli.command {
        Command::Run(a) => commands::run::execute(&ctx, &a),
        Command::Pep(a) => commands::pep::execute(&ctx, &a),
        Command::Tune(a) => commands::tune::execute(&ctx, &a),
        Command::Audit(a) => commands::audit::execute(&ctx, &a),
        Command::GenGame(a) => commands::gen_game::execute(&ctx, &a),
        Command::Reproduce(a) => commands::reproduce::execute(&ctx, &a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
