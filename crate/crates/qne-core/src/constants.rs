//! Numerical tolerances, fixed in one place so every module agrees on them.

/// Maximum allowed deviation from Hermitian symmetry, `max |A[i][j] - conj(A[j][i])|`.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Maximum allowed deviation of a state trace or vector norm from 1.
pub const TRACE_TOL: f64 = 1e-10;

/// Lowest admissible eigenvalue of a density operator (PSD up to rounding).
pub const PSD_TOL: f64 = 1e-10;

/// Frobenius-norm bound for eigendecomposition round trips `‖A - V Λ V†‖_F`.
pub const DECOMPOSITION_TOL: f64 = 1e-9;

/// Eigenvalues at or below this are treated as singular for `ln` and
/// negative powers.
pub const SINGULAR_TOL: f64 = 1e-12;

/// Eigenvalues at or below this are dropped from `-Σ λ ln λ` sums
/// (`0·ln 0 := 0`).
pub const ENTROPY_EIG_CLAMP: f64 = 1e-14;

/// Probabilities may undershoot zero by at most this before an outcome
/// distribution is rejected; smaller negatives are clamped to 0.
pub const PROBABILITY_CLAMP: f64 = 1e-12;

/// Maximum drift of an outcome distribution's sum from 1 before
/// renormalization is refused.
pub const DISTRIBUTION_DRIFT_TOL: f64 = 1e-9;

/// Largest supported Hilbert-space dimension (12 qubits, enough for
/// purifications of 6-qubit mixed states).
pub const MAX_DIM: usize = 4096;
