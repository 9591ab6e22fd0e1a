use std::process::ExitCode;

use clap::Parser;
use gsdeform_service::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = gsdeform_service::configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match run(cli, &mut std::io::stdout()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
