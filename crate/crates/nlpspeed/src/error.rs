//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failures raised by the speed formulas, solvers and simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter is outside its admissible range.
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// A formula was evaluated outside the regime where it is defined.
    #[error("formula `{formula}` is not applicable: {reason}")]
    Domain {
        formula: &'static str,
        reason: String,
    },

    /// An iterative solver did not reach its tolerance.
    #[error("{solver} did not converge after {iterations} iterations (last residual {residual:.3e})")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// A profile vanishes on the whole grid, so its free boundary lies beyond it.
    #[error("free boundary beyond s_max = {s_max}")]
    FreeBoundaryBeyondGrid { s_max: f64 },

    /// The explicit scheme produced a value outside the invariant region.
    #[error("instability at t = {time}: species u{species} took value {value} at x = {x}")]
    Instability {
        time: f64,
        species: usize,
        x: f64,
        value: f64,
    },

    /// Not enough data to carry out a statistical estimate.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A requested species or window does not exist in a result.
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
