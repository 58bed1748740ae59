//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by instance handling, simulation, and experiment runs.
#[derive(Debug, Error)]
pub enum Error {
    /// Instance file is not valid JSON.
    #[error("malformed instance JSON: {0}")]
    MalformedInstance(String),

    /// Instance content violates a structural invariant.
    #[error("invalid instance `{name}`: {reason}")]
    InvalidInstance { name: String, reason: String },

    /// Requested generator parameters cannot yield a valid instance.
    #[error("infeasible generator parameters: {0}")]
    InfeasibleParameters(String),

    /// Variable or qubit count exceeds the enumeration / simulation budget.
    #[error("{what} requires n <= {limit}, got n = {n}")]
    BudgetExceeded {
        what: &'static str,
        limit: usize,
        n: usize,
    },

    /// Vector length does not match the model dimension.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// Gate refers to a qubit outside the register, or repeats a qubit.
    #[error("invalid gate operand: {0}")]
    InvalidGate(String),

    /// Empty measurement record where at least one shot is required.
    #[error("empty shot counts")]
    EmptyCounts,

    /// Configuration value out of its documented range.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Non-positive reference value; the penalty construction guarantees a
    /// positive optimum, so this signals a broken problem setup.
    #[error("non-positive reference value {0}; penalties are misconfigured")]
    NonPositiveReference(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
