use std::process::ExitCode;

use clap::Parser;
use ts1_bench::cli::{run, Cli};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ts1-bench: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
