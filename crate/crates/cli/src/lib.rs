//! Command-line orchestration for the amc toolkit: run configuration,
//! manifests, confusion matrices and the benchmark experiments.

pub mod commands;
pub mod config;
pub mod confusion;
pub mod experiments;
pub mod manifest;

use std::fmt;

/// A bad flag, config entry or argument combination; exits with code 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArgError(pub String);

impl fmt::Display for ArgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ArgError {}

pub const EXIT_ARGUMENT: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_CONVERGENCE: u8 = 3;

fn core_exit_code(e: &amc_core::Error) -> u8 {
    use amc_core::Error as E;
    match e {
        E::Config(_) | E::UnknownLabel(_) => EXIT_ARGUMENT,
        E::Convergence { .. } => EXIT_CONVERGENCE,
        E::Feature { source, .. } => core_exit_code(source),
        _ => EXIT_DATA,
    }
}

/// Exit status for a failed command.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ArgError>() {
            return EXIT_ARGUMENT;
        }
        if let Some(e) = cause.downcast_ref::<amc_core::Error>() {
            return core_exit_code(e);
        }
    }
    EXIT_DATA
}
