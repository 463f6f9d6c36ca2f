use std::process::ExitCode;

use clap::Parser;
use netauction_cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(report) => {
            print!("{}", report.text);
            ExitCode::from(report.exit_code())
        }
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
