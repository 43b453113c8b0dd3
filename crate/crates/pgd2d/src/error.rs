//! Crate-wide error type.
//!
//! Data-dependent failures (bad files, out-of-range steps, divergent
//! training) are reported through [`Error`]. Shape mismatches between
//! parameter sets that can only arise from caller bugs are asserted
//! instead.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite {what}: {value:?}")]
    NonFinite { what: &'static str, value: Vec<f64> },

    #[error("step index {t} outside schedule range 1..={max}")]
    StepOutOfRange { t: usize, max: usize },

    #[error("parameter shapes differ: {left} vs {right}")]
    ShapeMismatch { left: String, right: String },

    #[error("{what} must not be empty")]
    Empty { what: &'static str },

    #[error("invalid {what}: {why}")]
    Invalid { what: &'static str, why: String },

    #[error("dataset has no {label} points")]
    MissingLabel { label: &'static str },

    #[error("guidance mode {mode} requires the {slot} model slot")]
    MissingModelSlot { mode: &'static str, slot: &'static str },

    #[error("{path}:{line}: {why}")]
    Parse { path: String, line: usize, why: String },

    #[error("training diverged at step {step} (loss {loss})")]
    Diverged { step: usize, loss: f64 },

    #[error("non-finite DPO logit for pair {pair}")]
    NonFiniteLogit { pair: usize },

    #[error("degenerate covariance in Fréchet distance (trace+2*sqrt(det) = {value})")]
    DegenerateCovariance { value: f64 },

    #[error("paired lists have different lengths: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("mismatched noise draws: {expected} pairs but {got} draws")]
    MismatchedDraws { expected: usize, got: usize },

    #[error("checkpoint {path}: {why}")]
    Checkpoint { path: String, why: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
