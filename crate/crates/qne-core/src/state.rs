//! Pure states and density operators.
//!
//! Conventions pinned here:
//! - All dimensions are powers of two, at most 4096 (12 qubits).
//! - In a purification the reference system is the *leading* tensor factor:
//!   amplitude index `a * system_dim + b` addresses reference basis state
//!   `a` and system basis state `b`.
//! - Density operators are validated on every construction path, including
//!   the JSON loader: Hermitian within `1e-12`, unit trace within `1e-10`,
//!   eigenvalues above `-1e-10`.

use num_complex::Complex64;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::constants::{HERMITICITY_TOL, MAX_DIM, PSD_TOL, TRACE_TOL};
use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, ComplexMatrix};

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidDimension("dimension must be positive".into()));
    }
    if !dim.is_power_of_two() {
        return Err(Error::InvalidDimension(format!(
            "dimension {dim} is not a power of two"
        )));
    }
    if dim > MAX_DIM {
        return Err(Error::InvalidDimension(format!(
            "dimension {dim} exceeds the supported maximum {MAX_DIM}"
        )));
    }
    Ok(())
}

/// Normalized pure state on a power-of-two dimensional Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    dim: usize,
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Validating constructor: checks dimension and unit norm.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = amplitudes.len();
        check_dim(dim)?;
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sq.sqrt() - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvariantViolation(format!(
                "state norm {} deviates from 1",
                norm_sq.sqrt()
            )));
        }
        Ok(Self { dim, amplitudes })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Rank-one density operator `|ψ⟩⟨ψ|`.
    pub fn to_density(&self) -> Result<DensityOperator> {
        let d = self.dim;
        let mut m = ComplexMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = self.amplitudes[i] * self.amplitudes[j].conj();
            }
        }
        DensityOperator::new(m)
    }
}

/// Haar-distributed pure state: i.i.d. standard complex Gaussian amplitudes,
/// normalized. Deterministic under a fixed RNG stream.
pub fn random_pure_state(dim: usize, rng: &mut impl rand::Rng) -> Result<PureState> {
    check_dim(dim)?;
    let mut amplitudes: Vec<Complex64> = (0..dim)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im)
        })
        .collect();
    let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amplitudes {
        *a /= norm;
    }
    PureState::new(amplitudes)
}

/// Trace out the leading (reference) factor of a purification.
///
/// The reference system must have the same dimension as the system, so
/// `state.dim` must equal `system_dim²`.
pub fn partial_trace_reference(state: &PureState, system_dim: usize) -> Result<DensityOperator> {
    check_dim(system_dim)?;
    let reference_dim = system_dim;
    if reference_dim * system_dim != state.dim() {
        return Err(Error::InvalidDimension(format!(
            "state dimension {} does not factor as {}x{} (reference x system)",
            state.dim(),
            reference_dim,
            system_dim
        )));
    }
    let amps = state.amplitudes();
    let mut m = ComplexMatrix::zeros(system_dim, system_dim);
    for a in 0..reference_dim {
        let row = &amps[a * system_dim..(a + 1) * system_dim];
        for b in 0..system_dim {
            for b2 in 0..system_dim {
                m[(b, b2)] += row[b] * row[b2].conj();
            }
        }
    }
    DensityOperator::new(m)
}

/// Density operator: Hermitian, unit-trace, positive semidefinite complex
/// matrix of power-of-two dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    dim: usize,
    matrix: ComplexMatrix,
}

impl DensityOperator {
    /// Validating constructor; checks all invariants.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "density operator must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let dim = matrix.rows();
        check_dim(dim)?;

        let defect = matrix.hermiticity_defect();
        if defect > HERMITICITY_TOL {
            return Err(Error::NotHermitian {
                max_asymmetry: defect,
            });
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
            return Err(Error::InvariantViolation(format!(
                "trace {} deviates from 1",
                trace.re
            )));
        }
        let eigs = eig_hermitian(&matrix)?;
        if eigs.eigenvalues[0] < -PSD_TOL {
            return Err(Error::InvariantViolation(format!(
                "minimum eigenvalue {:.3e} below PSD tolerance",
                eigs.eigenvalues[0]
            )));
        }
        Ok(Self { dim, matrix })
    }

    /// Maximally mixed state `I/d`.
    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            matrix: ComplexMatrix::identity(dim).scale(Complex64::new(1.0 / dim as f64, 0.0)),
        })
    }

    /// Diagonal state from a probability vector.
    pub fn from_probabilities(probs: &[f64]) -> Result<Self> {
        Self::new(ComplexMatrix::diagonal(probs))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of qubits (`log2` of the dimension).
    pub fn num_qubits(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Ascending spectrum.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(eig_hermitian(&self.matrix)?.eigenvalues)
    }

    /// Serialize to the interchange form (see [`DensityOperatorJson`]).
    pub fn to_json_value(&self) -> DensityOperatorJson {
        let d = self.dim;
        let mut re = vec![vec![0.0; d]; d];
        let mut im = vec![vec![0.0; d]; d];
        for i in 0..d {
            for j in 0..d {
                re[i][j] = self.matrix[(i, j)].re;
                im[i][j] = self.matrix[(i, j)].im;
            }
        }
        DensityOperatorJson { dim: d, re, im }
    }

    /// Serialize to a JSON string.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("density operator serializes")
    }

    /// Parse and re-validate from the interchange form.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: DensityOperatorJson = serde_json::from_str(text)?;
        raw.try_into()
    }
}

/// JSON interchange form: `{"dim": d, "re": [[...]], "im": [[...]]}` with
/// row-major `d x d` arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityOperatorJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl TryFrom<DensityOperatorJson> for DensityOperator {
    type Error = Error;

    fn try_from(raw: DensityOperatorJson) -> Result<Self> {
        let d = raw.dim;
        if raw.re.len() != d || raw.im.len() != d {
            return Err(Error::Serialization(format!(
                "expected {d} rows, got re: {}, im: {}",
                raw.re.len(),
                raw.im.len()
            )));
        }
        let mut m = ComplexMatrix::zeros(d, d);
        for i in 0..d {
            if raw.re[i].len() != d || raw.im[i].len() != d {
                return Err(Error::Serialization(format!("row {i} has wrong length")));
            }
            for j in 0..d {
                m[(i, j)] = Complex64::new(raw.re[i][j], raw.im[i][j]);
            }
        }
        DensityOperator::new(m)
    }
}
