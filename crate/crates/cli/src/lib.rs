//! Command implementations behind the `counting-tricks` binary.
//!
//! Each command is an ordinary function from parsed arguments to a process
//! exit code, so tests can drive the logic without spawning a process.
//! Nothing here reads the clock: given the same arguments, every command
//! writes byte-identical outputs.

pub mod demo;
pub mod evaluate;
pub mod generate;
pub mod probe;

/// The run completed but left gaps (skipped samples, unmatched responses).
pub const EXIT_PARTIAL: i32 = 2;
/// Inputs were rejected before anything was written.
pub const EXIT_INVALID: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad arguments or unreadable inputs, detected before any writes;
    /// maps to [`EXIT_INVALID`].
    #[error("{0}")]
    Invalid(String),
    /// Failure mid-run; maps to exit code 1.
    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}
