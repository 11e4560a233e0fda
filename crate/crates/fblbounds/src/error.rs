//! Error types shared by every fallible operation in the toolkit.
//!
//! Variants split into two families, mirrored by the CLI exit codes:
//!
//! * precondition failures: the inputs are outside an operation's documented
//!   domain, or the requested combination is not supported (exit code 2);
//! * numerical failures: the inputs were admissible but a solver could not
//!   certify a result at the requested tolerance, or the underlying bound is
//!   vacuous at this blocklength (exit code 3).

use thiserror::Error;

/// Errors produced by channel construction, tilting, solvers, and bounds.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// A scalar argument lies outside its documented domain.
    #[error("out of range: {0}")]
    OutOfRange(String),

    /// A vector or matrix argument has the wrong shape for the channel.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The operation is not defined for this channel kind or configuration.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A symmetric-channel operation was invoked on an asymmetric channel.
    #[error("not a symmetric binary-input channel: {0}")]
    NotSymmetric(String),

    /// A distribution has support incompatible with the requested statistic.
    #[error("unsupported support: {0}")]
    UnsupportedSupport(String),

    /// A statistic is almost surely constant, so tail solving is vacuous.
    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    /// The Berry-Esseen remainder exceeds the Gaussian term, so the
    /// lower-sandwich (or converse envelope) is vacuous at this blocklength.
    #[error("Berry-Esseen remainder dominates: {0}")]
    BerryEsseenDominates(String),

    /// Bracket growth hit its cap without enclosing a sign change.
    #[error("bracketing failed: {0}")]
    BracketFailed(String),

    /// The target lies outside the range where the solved equation has a
    /// unique root (for example an error probability above one half).
    #[error("target outside unique-solvability range: {0}")]
    OutOfUniqueRange(String),

    /// The mutual-information constraint set contains no input distribution.
    #[error("empty feasible region: {0}")]
    EmptyFeasibleRegion(String),

    /// An exact enumeration was requested beyond its size cap.
    #[error("problem too large for exact enumeration: {0}")]
    TooLarge(String),

    /// A documented precondition on bound parameters fails (for example a
    /// converse multiplier pushing the target probability to one or beyond).
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// An iteration limit was reached before meeting the tolerance.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// A channel specification could not be parsed or validated.
    #[error("invalid channel spec: {0}")]
    InvalidSpec(String),
}

impl Error {
    /// Short machine-readable code used in CSV/JSON `status` columns.
    pub fn code(&self) -> &'static str {
        match self {
            Error::OutOfRange(_) => "out-of-range",
            Error::DimensionMismatch(_) => "dimension-mismatch",
            Error::Unsupported(_) => "unsupported",
            Error::NotSymmetric(_) => "not-symmetric",
            Error::UnsupportedSupport(_) => "unsupported-support",
            Error::DegenerateVariance(_) => "degenerate-variance",
            Error::BerryEsseenDominates(_) => "berry-esseen-dominates",
            Error::BracketFailed(_) => "bracket-failed",
            Error::OutOfUniqueRange(_) => "out-of-unique-range",
            Error::EmptyFeasibleRegion(_) => "empty-feasible-region",
            Error::TooLarge(_) => "too-large",
            Error::Precondition(_) => "precondition",
            Error::NoConvergence(_) => "no-convergence",
            Error::InvalidSpec(_) => "invalid-spec",
        }
    }

    /// True for input/precondition failures (CLI exit code 2); false for
    /// numerical failures (CLI exit code 3).
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::OutOfRange(_)
                | Error::DimensionMismatch(_)
                | Error::Unsupported(_)
                | Error::NotSymmetric(_)
                | Error::UnsupportedSupport(_)
                | Error::EmptyFeasibleRegion(_)
                | Error::TooLarge(_)
                | Error::Precondition(_)
                | Error::InvalidSpec(_)
        )
    }
}

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
