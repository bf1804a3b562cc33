//! Error type shared by every module in the crate.
//!
//! Variants are grouped by how a caller should react: `InvalidInput`,
//! `DegenerateInput` and `UnsupportedParameter` mean the request itself was
//! malformed (fix the arguments); the remaining variants report a numerical
//! condition discovered mid-computation.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument violates a documented precondition or type invariant.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Inputs are formally valid but make the requested formula degenerate
    /// (e.g. a division by zero in a closed form).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// The requested code path cannot handle this parameter value; the
    /// message names the alternative to use.
    #[error("unsupported parameter: {0}")]
    UnsupportedParameter(String),

    /// A closed-form coefficient is singular or undefined at the requested
    /// point (zero denominator, negative root argument).
    #[error("singular coefficient: {0}")]
    SingularCoefficient(String),

    /// The exponential-moment transform diverges: the Riccati solution blew
    /// up or crossed the jump-transform pole before time `s`.
    #[error("transform divergence at s = {s}: {reason}")]
    TransformDivergence { s: f64, reason: String },

    /// Explicit path enumeration was asked to expand more paths than the
    /// configured limit allows; the message points to the recursive form.
    #[error("enumeration limit exceeded: {0}")]
    EnumerationLimit(String),

    /// An adaptive series truncation could not reach the requested tail
    /// bound within the configured maximum number of terms.
    #[error("truncation failure: achieved tail bound {achieved:e} > requested {requested:e} after {terms} terms")]
    TruncationFailure {
        achieved: f64,
        requested: f64,
        terms: usize,
    },

    /// A Monte Carlo run produced no usable samples (every path censored).
    #[error("empty law: {0}")]
    EmptyLaw(String),

    /// Malformed tabular input; `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl Error {
    /// True when the error indicates bad user input rather than a numerical
    /// failure discovered during an otherwise valid computation. CLI front
    /// ends map this distinction onto exit codes.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::DegenerateInput(_)
                | Error::UnsupportedParameter(_)
                | Error::Parse { .. }
        )
    }
}
