mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use config::{Cli, FileConfig};

/// Outcome of a command: all assertions held, some failed, or bad input.
pub enum Outcome {
    Pass,
    Fail,
}

pub enum LabError {
    Usage(String),
    Io(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let file = match &cli.config {
        Some(path) => match FileConfig::load(path) {
            Ok(f) => f,
            Err(e) => {
                eprintln!("nqlab: {e}");
                return ExitCode::from(2);
            }
        },
        None => FileConfig::default(),
    };
    let flags = config::merge(cli.command.flags(), &file, cli.command.name());
    let result = match cli.command {
        config::Command::Verify(_) => commands::verify(&flags),
        config::Command::Progress(_) => commands::progress(&flags),
        config::Command::Experiment(_) => commands::experiment(&flags),
        config::Command::CoinToss(_) => commands::coin_toss(&flags),
    };
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(LabError::Usage(msg)) => {
            eprintln!("nqlab: {msg}");
            ExitCode::from(2)
        }
        Err(LabError::Io(msg)) => {
            eprintln!("nqlab: {msg}");
            ExitCode::from(1)
        }
    }
}
