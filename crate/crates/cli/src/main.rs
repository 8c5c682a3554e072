use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = phasesep_cli::Cli::parse();
    match phasesep_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
