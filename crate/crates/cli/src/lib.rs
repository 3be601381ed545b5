//! Command-line front end: scenario files, commands and report encodings.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x >= 0.0)` also rejects NaN

pub mod commands;
pub mod report;
pub mod reproduce;
pub mod scenario;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input: unreadable scenario, rejected option combination.
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Scenario(#[from] scenario::Diagnostic),

    #[error(transparent)]
    Engine(#[from] stratclass::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            _ => 2,
        }
    }
}
