//! Deterministic engine for small two-player zero-sum board games.
//!
//! The crate bundles the game rules (`games`), tabular Q-learning with an
//! optional Monte Carlo fallback (`learning`), flat Monte Carlo search and
//! UCT minmax tree search (`search`), a match and experiment harness
//! (`harness`), file output for series, matrices, and Q-table snapshots
//! (`report`), and an exact minimax oracle for validation (`oracle`).
//!
//! All randomness flows through caller-supplied `rand` generators, so every
//! run is reproducible from a seed.

pub mod error;
pub mod games;
pub mod harness;
pub mod learning;
pub mod oracle;
pub mod report;
pub mod search;

pub use error::Error;
