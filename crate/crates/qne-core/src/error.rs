//! Error type shared by every module in the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building states, circuits, or
/// running an estimator.
#[derive(Debug, Error)]
pub enum Error {
    /// A dimension is zero, not a power of two, above the supported
    /// maximum, or does not factor as required.
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    /// Two operands do not have conformable shapes.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A matrix expected to be Hermitian is not, within tolerance.
    #[error("matrix is not Hermitian: max asymmetry {max_asymmetry:.3e}")]
    NotHermitian { max_asymmetry: f64 },

    /// `ln` or a negative power was requested on an operator with an
    /// eigenvalue at or below the singularity cutoff.
    #[error("singular operand: eigenvalue {eigenvalue:.3e} too small for the requested function")]
    SingularOperand { eigenvalue: f64 },

    /// A validated invariant does not hold (trace, norm, positivity, ...).
    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    /// A computation left the numerically trustworthy regime.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// Circuit parameter vector length does not match the layout.
    #[error("parameter length mismatch: layout has {expected} parameters, got {actual}")]
    ParameterMismatch { expected: usize, actual: usize },

    /// A basis-state index is outside `0..2^num_qubits`.
    #[error("index {index} out of range for {num_qubits} qubits")]
    IndexOutOfRange { index: usize, num_qubits: usize },

    /// A sampled mean that feeds a logarithm underflowed to zero or below.
    #[error("degenerate batch: sample mean {mean:.3e} is not positive")]
    DegenerateBatch { mean: f64 },

    /// Training produced a non-finite objective; the partial trace of the
    /// run is attached for post-mortem inspection.
    #[error("training diverged at epoch {epoch}")]
    TrainingDiverged {
        epoch: usize,
        trace: Box<crate::estimators::TrainingTrace>,
    },

    /// Configuration field combination is invalid.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Serialized data failed to parse or validate.
    #[error("serialization error: {0}")]
    Serialization(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
