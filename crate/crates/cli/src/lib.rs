//! Command-line front-end for `copula-impute`.
//!
//! Exit codes: 0 success, 1 benchmark finished with failed cells, 2
//! configuration error, 3 data error, 4 numerical failure.

pub mod cli;
pub mod commands;
pub mod config;
pub mod manifest;
pub mod output;

use copula_impute::{Error, ErrorClass};

pub use cli::{Cli, Command};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CELL_FAILURES: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

pub fn exit_code(e: &Error) -> i32 {
    match e.class() {
        ErrorClass::Config => EXIT_CONFIG,
        ErrorClass::Data => EXIT_DATA,
        ErrorClass::Numerical => EXIT_NUMERICAL,
    }
}

/// Runs a parsed command line and returns the process exit code. Errors are
/// reported on standard error.
pub fn run(cli: &Cli) -> i32 {
    let (jobs, quiet) = (cli.jobs, cli.quiet);
    let result = match &cli.command {
        Command::Impute(a) => commands::impute(a, jobs, quiet).map(|_| true),
        Command::Simulate(a) => commands::simulate(a, jobs, quiet).map(|_| true),
        Command::Evaluate(a) => commands::evaluate(a, jobs, quiet).map(|_| true),
        Command::Benchmark(a) => commands::benchmark(a, jobs, quiet),
        Command::Regress(a) => commands::regress(a, jobs, quiet).map(|_| true),
    };
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_CELL_FAILURES,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
