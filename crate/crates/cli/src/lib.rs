//! Command implementations behind the `drivevqa` binary.
//!
//! Each command is a plain function over a parsed argument struct so
//! integration tests can drive it in-process; `main` only parses flags and
//! maps errors to exit codes. The contract across commands: exit 0 on
//! success, 1 on environment/I-O failure, 2 on invalid input or
//! configuration, and no output files are written on failure.

pub mod commands;
pub mod plot;

use std::fmt;

use drivevqa_core::error::CoreError;

/// Exit code for environment and I/O failures.
pub const EXIT_IO: i32 = 1;
/// Exit code for invalid input or configuration.
pub const EXIT_INVALID: i32 = 2;

/// A command failure carrying the exit code `main` should use.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_IO,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        let code = if err.is_environment() {
            EXIT_IO
        } else {
            EXIT_INVALID
        };
        CliError {
            code,
            message: err.to_string(),
        }
    }
}

/// Environment variable consulted when `--corpus` is not given.
pub const CORPUS_ENV: &str = "DRIVEVQA_CORPUS";
