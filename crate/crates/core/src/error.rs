//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by game construction, play, learning, and file handling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid game parameters: {0}")]
    InvalidGame(String),

    #[error("unknown game token `{0}`")]
    UnknownGame(String),

    #[error("illegal move {mv} in state {state}")]
    IllegalMove { mv: u16, state: String },

    #[error("goal requested for non-terminal state {0}")]
    NonTerminal(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown agent token `{0}`")]
    UnknownAgent(String),

    #[error("unknown budget token `{0}`")]
    UnknownBudget(String),

    #[error("agent `{0}` plays a frozen policy but no snapshot was given")]
    MissingSnapshot(String),

    #[error("snapshot {path} does not match: {reason}")]
    SnapshotMismatch { path: String, reason: String },

    #[error("parse error in {path} line {line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },

    #[error("state space exceeds {0} states")]
    StateSpaceTooLarge(usize),

    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
