//! The `fireline` command-line pipeline: segment a line network, score the
//! segments against daily fire-potential rasters, and choose segments to
//! underground within a budget. Every run also writes a manifest holding
//! the full configuration and SHA-256 digests of its inputs.

pub mod args;
pub mod commands;
pub mod error;
pub mod manifest;
pub mod pipeline;

use std::ffi::OsString;

use clap::Parser;

pub use args::Cli;
pub use error::CliError;

pub fn run(cli: &Cli) -> Result<(), CliError> {
    use args::Command;
    match &cli.command {
        Command::Segment(a) => commands::segment(a),
        Command::Risk(a) => commands::risk(a),
        Command::Optimize(a) => commands::optimize(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Compare(a) => commands::compare(a),
    }
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
