use std::process::ExitCode;

use clap::Parser;
use fracdiff_cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(r) if r.ok => ExitCode::SUCCESS,
        Ok(_) => {
            eprintln!("fracdiff: one or more runs failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("fracdiff: {e:#}");
            ExitCode::FAILURE
        }
    }
}
