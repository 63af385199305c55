use thiserror::Error;

/// Errors shared across the library. Every fallible operation returns one of
/// these variants; none of the numeric kernels panic on valid inputs.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Operation asked of a policy kind it is not defined for.
    #[error("not applicable: {0}")]
    NotApplicable(String),

    /// Geometric-series denominator vanished; closed form undefined there.
    #[error("degenerate denominator in closed-form block weight")]
    DegenerateDenominator,

    /// Closed form for the halving schedule requires exact integer divisions.
    #[error("inexact division: {0}")]
    InexactDivision(String),

    /// Supplied phase boundary cannot come from the stated policy parameters.
    #[error("invalid phase boundary: {0}")]
    InvalidBoundary(String),

    /// A closed form's standing hypothesis fails at these parameters.
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("empty trace")]
    EmptyTrace,

    /// Replay diverged from the recorded trace at `step`.
    #[error("corrupt trace: first divergence at step {step}")]
    CorruptTrace { step: u64 },

    #[error("histogram binning mismatch: {left} vs {right} nodes")]
    BinningMismatch { left: u32, right: u32 },
}

pub type Result<T> = std::result::Result<T, Error>;
