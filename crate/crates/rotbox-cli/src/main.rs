//! `rotbox`: membership, optimization, certificates and demos for
//! spin-bounded rotation boxes.
//!
//! Exit codes: 0 success, 1 infeasible or violated, 2 usage error,
//! 3 numerical failure. Results go to stdout as JSON (or CSV with `--csv`
//! for sweeps); diagnostics go to stderr.

mod commands;
mod error;
mod input;
mod output;

use std::process::ExitCode;

use clap::Parser;

use crate::commands::Cli;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(verdict) => ExitCode::from(verdict.code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
