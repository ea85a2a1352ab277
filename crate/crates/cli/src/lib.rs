//! `cvtf` command-line front end.
//!
//! Exit codes: 0 success, 1 usage or parse error, 2 regime violation,
//! 3 verification failure.

use std::ffi::OsString;

use clap::Parser;

pub mod args;
pub mod compute;
pub mod config;
pub mod output;
pub mod point;
pub mod sweep;
pub mod verify;

use args::{Cli, Command};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Regime(String),
    #[error("{0} verification check(s) failed")]
    Verify(usize),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Regime(_) => 2,
            CliError::Verify(_) => 3,
        }
    }
}

/// Parse `argv` and run the selected verb, returning the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let env_seed = std::env::var(config::SEED_ENV).ok();
    let result = match &cli.command {
        Command::Point(a) => {
            config::resolve(&a.common, env_seed.as_deref()).and_then(|s| point::cmd_point(a, &s))
        }
        Command::Sweep(a) => {
            config::resolve(&a.common, env_seed.as_deref()).and_then(|s| sweep::cmd_sweep(a, &s))
        }
        Command::Verify(a) => {
            config::resolve(&a.common, env_seed.as_deref()).and_then(|s| verify::cmd_verify(a, &s))
        }
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            match &e {
                CliError::Regime(msg) => eprintln!("error: regime violation: {msg}"),
                other => eprintln!("error: {other}"),
            }
            e.exit_code()
        }
    }
}
