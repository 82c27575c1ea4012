//! Dense complex linear algebra: matrices, the Hermitian eigensolver, and
//! spectral matrix functions.
//!
//! Everything is dense and row-major. The eigensolver is a cyclic Jacobi
//! iteration with complex rotations; it carries no external solver
//! dependency and meets the crate-wide `1e-9` reconstruction bound for the
//! dimensions used here (d ≤ 4096, eigendecompositions only up to d = 64
//! in practice).

use num_complex::Complex64;

use crate::constants::{DECOMPOSITION_TOL, HERMITICITY_TOL, SINGULAR_TOL};
use crate::error::{Error, Result};

/// Dense complex matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Matrix from row-major entries. Panics if the entry count does not
    /// match `rows * cols`.
    pub fn from_entries(rows: usize, cols: usize, entries: Vec<Complex64>) -> Self {
        assert_eq!(
            entries.len(),
            rows * cols,
            "entry count {} does not match {}x{}",
            entries.len(),
            rows,
            cols
        );
        Self {
            rows,
            cols,
            entries,
        }
    }

    /// Zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    /// Identity matrix.
    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Diagonal matrix from real entries.
    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entry slice.
    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matmul shape mismatch {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Self::zeros(self.rows, other.cols);
        // i-k-j loop order keeps the inner loop contiguous in both operands.
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let src = &other.entries[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.entries[i * other.cols..(i + 1) * other.cols];
                for (d, s) in dst.iter_mut().zip(src.iter()) {
                    *d += a * s;
                }
            }
        }
        out
    }

    /// Entry-wise addition.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + b)
            .collect();
        Self::from_entries(self.rows, self.cols, entries)
    }

    /// Entry-wise subtraction.
    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        Self::from_entries(self.rows, self.cols, entries)
    }

    /// Scalar multiple.
    pub fn scale(&self, factor: Complex64) -> Self {
        let entries = self.entries.iter().map(|a| a * factor).collect();
        Self::from_entries(self.rows, self.cols, entries)
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest deviation from Hermitian symmetry,
    /// `max_{i,j} |A[i][j] - conj(A[j][i])|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                let defect = (self[(i, j)] - self[(j, i)].conj()).norm();
                worst = worst.max(defect);
            }
        }
        worst
    }

    /// True when the matrix is square and Hermitian within `HERMITICITY_TOL`.
    pub fn is_hermitian(&self) -> bool {
        self.is_square() && self.hermiticity_defect() <= HERMITICITY_TOL
    }

    /// Replace the matrix with `(A + A†)/2`, discarding rounding asymmetry.
    pub fn hermitize(&mut self) {
        assert!(self.is_square());
        for i in 0..self.rows {
            for j in i..self.cols {
                let avg = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
                self[(i, j)] = avg;
                self[(j, i)] = avg.conj();
            }
            let d = self[(i, i)];
            self[(i, i)] = Complex64::new(d.re, 0.0);
        }
    }

    /// Sum of diagonal entries.
    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Commutator norm `‖AB - BA‖_F`.
    pub fn commutator_norm(&self, other: &Self) -> f64 {
        self.matmul(other).sub(&other.matmul(self)).frobenius_norm()
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[i * self.cols + j]
    }
}

/// Eigendecomposition of a Hermitian matrix: ascending real eigenvalues and
/// the unitary whose columns are the matching eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

/// Hermitian eigendecomposition by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order; `eigenvectors` column `k` pairs
/// with `eigenvalues[k]`, so `m = V diag(λ) V†` within `1e-9` Frobenius.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<EigenDecomposition> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let defect = m.hermiticity_defect();
    if defect > HERMITICITY_TOL {
        return Err(Error::NotHermitian {
            max_asymmetry: defect,
        });
    }

    let n = m.rows();
    let mut a = m.clone();
    a.hermitize();
    let mut v = ComplexMatrix::identity(n);

    if n > 1 {
        let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
        // Quadratic convergence makes ~30 sweeps ample even at d = 64;
        // termination normally happens after 6-10.
        let max_sweeps = 64;
        for _ in 0..max_sweeps {
            let mut off_sq = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off_sq += a[(p, q)].norm_sqr();
                }
            }
            if (2.0 * off_sq).sqrt() <= 1e-15 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    jacobi_rotate(&mut a, &mut v, p, q);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap());

    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..n {
            eigenvectors[(row, new_col)] = v[(row, old_col)];
        }
    }

    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// One complex Jacobi rotation zeroing `a[(p, q)]`, accumulated into `v`.
fn jacobi_rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let phase = apq / r; // apq = r * phase
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;

    // tan(2θ) = 2r / (aqq - app), stable tangent formula.
    let tau = (aqq - app) / (2.0 * r);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let n = a.rows();
    // J differs from I only in rows/cols p,q:
    //   J[p][p] = c          J[p][q] = s * phase
    //   J[q][p] = -s * conj(phase)   J[q][q] = c
    // Column update: A <- A J.
    for i in 0..n {
        let aip = a[(i, p)];
        let aiq = a[(i, q)];
        a[(i, p)] = aip * c - aiq * s * phase.conj();
        a[(i, q)] = aip * s * phase + aiq * c;
    }
    // Row update: A <- J† A.
    for j in 0..n {
        let apj = a[(p, j)];
        let aqj = a[(q, j)];
        a[(p, j)] = apj * c - aqj * s * phase;
        a[(q, j)] = apj * s * phase.conj() + aqj * c;
    }
    // Pin the analytically exact values; rounding otherwise leaves dust in
    // the pivot entries.
    a[(p, p)] = Complex64::new(app - t * r, 0.0);
    a[(q, q)] = Complex64::new(aqq + t * r, 0.0);
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);

    // Eigenvector accumulation: V <- V J.
    for i in 0..n {
        let vip = v[(i, p)];
        let viq = v[(i, q)];
        v[(i, p)] = vip * c - viq * s * phase.conj();
        v[(i, q)] = vip * s * phase + viq * c;
    }
}

/// Apply a real scalar function to a Hermitian matrix through its spectrum:
/// `f(A) = V diag(f(λ)) V†`. The result is hermitized before returning.
pub fn matrix_function(m: &ComplexMatrix, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
    let decomp = eig_hermitian(m)?;
    let mapped: Vec<f64> = decomp.eigenvalues.iter().map(|&l| f(l)).collect();
    Ok(reassemble(&decomp.eigenvectors, &mapped))
}

/// `V diag(values) V†` for a unitary `V`.
pub fn reassemble(eigenvectors: &ComplexMatrix, values: &[f64]) -> ComplexMatrix {
    let n = eigenvectors.rows();
    assert_eq!(values.len(), n);
    let mut out = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        let w = values[k];
        if w == 0.0 {
            continue;
        }
        for i in 0..n {
            let vik = eigenvectors[(i, k)] * w;
            for j in 0..n {
                out[(i, j)] += vik * eigenvectors[(j, k)].conj();
            }
        }
    }
    out.hermitize();
    out
}

/// Matrix exponential of a Hermitian matrix.
pub fn matrix_exp(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    matrix_function(m, f64::exp)
}

/// Matrix logarithm of a positive-definite Hermitian matrix.
///
/// Fails with `SingularOperand` when any eigenvalue is at or below the
/// singularity cutoff.
pub fn matrix_ln(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let decomp = eig_hermitian(m)?;
    if let Some(&bad) = decomp.eigenvalues.iter().find(|&&l| l <= SINGULAR_TOL) {
        return Err(Error::SingularOperand { eigenvalue: bad });
    }
    let mapped: Vec<f64> = decomp.eigenvalues.iter().map(|&l| l.ln()).collect();
    Ok(reassemble(&decomp.eigenvectors, &mapped))
}

/// Real matrix power `m^p` of a positive-semidefinite Hermitian matrix.
///
/// Eigenvalues in `(-PSD rounding, 0]` are clamped to zero for positive
/// powers; negative powers require strict positivity.
pub fn matrix_power(m: &ComplexMatrix, p: f64) -> Result<ComplexMatrix> {
    let decomp = eig_hermitian(m)?;
    if p < 0.0 {
        if let Some(&bad) = decomp.eigenvalues.iter().find(|&&l| l <= SINGULAR_TOL) {
            return Err(Error::SingularOperand { eigenvalue: bad });
        }
    }
    let mapped: Vec<f64> = decomp
        .eigenvalues
        .iter()
        .map(|&l| if l <= 0.0 { 0.0 } else { l.powf(p) })
        .collect();
    Ok(reassemble(&decomp.eigenvectors, &mapped))
}

/// `Tr[a b]` as `Σ_{i,j} a[i][j] b[j][i]`, without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Complex64> {
    if !a.is_square() || !b.is_square() || a.rows() != b.rows() {
        return Err(Error::DimensionMismatch(format!(
            "trace_product needs equal square matrices, got {}x{} and {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let n = a.rows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    Ok(acc)
}

/// Real part of `Tr[a b]` for a Hermitian/PSD pair; the imaginary part must
/// vanish within `1e-9` or the call fails.
pub fn trace_product_real(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    let t = trace_product(a, b)?;
    if t.im.abs() > 1e-9 {
        return Err(Error::NumericalFailure(format!(
            "trace of Hermitian product has imaginary part {:.3e}",
            t.im
        )));
    }
    Ok(t.re)
}

/// Round-trip residual `‖m - V diag(λ) V†‖_F`; exposed for tests and the
/// self-check command.
pub fn reconstruction_residual(m: &ComplexMatrix, decomp: &EigenDecomposition) -> f64 {
    reassemble(&decomp.eigenvectors, &decomp.eigenvalues)
        .sub(m)
        .frobenius_norm()
}

/// Check `V†V = I` within the decomposition tolerance.
pub fn unitarity_defect(v: &ComplexMatrix) -> f64 {
    v.adjoint()
        .matmul(v)
        .sub(&ComplexMatrix::identity(v.rows()))
        .frobenius_norm()
}

/// Random Hermitian matrix with i.i.d. Gaussian entries, for tests and
/// benchmarks.
pub fn random_hermitian(dim: usize, rng: &mut impl rand::Rng) -> ComplexMatrix {
    use rand_distr::StandardNormal;
    let mut m = ComplexMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            m[(i, j)] = Complex64::new(re, im);
        }
    }
    let mut h = m.add(&m.adjoint()).scale(Complex64::new(0.5, 0.0));
    h.hermitize();
    h
}

#[allow(dead_code)]
fn debug_assert_decomposition(m: &ComplexMatrix, d: &EigenDecomposition) {
    debug_assert!(reconstruction_residual(m, d) <= DECOMPOSITION_TOL);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_eigenvalues_are_ones() {
        let d = eig_hermitian(&ComplexMatrix::identity(2)).unwrap();
        assert_abs_diff_eq!(d.eigenvalues[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d.eigenvalues[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn pauli_z_eigenvalues() {
        let z = ComplexMatrix::diagonal(&[1.0, -1.0]);
        let d = eig_hermitian(&z).unwrap();
        assert_abs_diff_eq!(d.eigenvalues[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d.eigenvalues[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn random_hermitian_reconstruction_d8() {
        let mut rng = stream(11, &[99]);
        let m = random_hermitian(8, &mut rng);
        let d = eig_hermitian(&m).unwrap();
        assert!(reconstruction_residual(&m, &d) <= 1e-9);
        assert!(unitarity_defect(&d.eigenvectors) <= 1e-9);
    }

    #[test]
    fn reconstruction_bound_across_dims() {
        // 25 random matrices per dimension in {2, 4, 8, 64}.
        for (di, &dim) in [2usize, 4, 8, 64].iter().enumerate() {
            for rep in 0..25 {
                let mut rng = stream(500 + di as u64, &[rep]);
                let m = random_hermitian(dim, &mut rng);
                let d = eig_hermitian(&m).unwrap();
                let scale = m.frobenius_norm().max(1.0);
                assert!(
                    reconstruction_residual(&m, &d) <= 1e-9 * scale,
                    "residual too large at dim {dim}, rep {rep}"
                );
                assert!(unitarity_defect(&d.eigenvectors) <= 1e-9);
            }
        }
    }

    #[test]
    fn eigenvalues_ascending() {
        let mut rng = stream(12, &[0]);
        let m = random_hermitian(16, &mut rng);
        let d = eig_hermitian(&m).unwrap();
        for w in d.eigenvalues.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = ComplexMatrix::from_entries(
            2,
            2,
            vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        );
        assert!(matches!(
            eig_hermitian(&m),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let m = ComplexMatrix::zeros(3, 3);
        let e = matrix_exp(&m).unwrap();
        assert!(e.sub(&ComplexMatrix::identity(3)).frobenius_norm() <= 1e-12);
    }

    #[test]
    fn ln_of_diagonal_exponentials() {
        let m = ComplexMatrix::diagonal(&[std::f64::consts::E, std::f64::consts::E.powi(2)]);
        let l = matrix_ln(&m).unwrap();
        assert_abs_diff_eq!(l[(0, 0)].re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(l[(1, 1)].re, 2.0, epsilon = 1e-12);
        assert!(l[(0, 1)].norm() <= 1e-12);
    }

    #[test]
    fn sqrt_of_maximally_mixed() {
        let m = ComplexMatrix::diagonal(&[0.25; 4]);
        let s = matrix_power(&m, 0.5).unwrap();
        for i in 0..4 {
            assert_abs_diff_eq!(s[(i, i)].re, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn ln_of_singular_matrix_fails() {
        let m = ComplexMatrix::diagonal(&[1.0, 0.0]);
        assert!(matches!(
            matrix_ln(&m),
            Err(Error::SingularOperand { .. })
        ));
        assert!(matches!(
            matrix_power(&m, -0.5),
            Err(Error::SingularOperand { .. })
        ));
    }

    #[test]
    fn exp_ln_round_trip() {
        let mut rng = stream(13, &[1]);
        // Strictly positive spectrum: exp of a random Hermitian.
        let m = matrix_exp(&random_hermitian(4, &mut rng).scale(c(0.3, 0.0))).unwrap();
        let back = matrix_exp(&matrix_ln(&m).unwrap()).unwrap();
        assert!(back.sub(&m).frobenius_norm() <= 1e-8);
    }

    #[test]
    fn trace_product_matches_double_sum() {
        let mut rng = stream(14, &[2]);
        let a = random_hermitian(4, &mut rng);
        let b = random_hermitian(4, &mut rng);
        let t = trace_product(&a, &b).unwrap();
        // Independent route: full product then trace.
        let direct = a.matmul(&b).trace();
        assert_abs_diff_eq!(t.re, direct.re, epsilon = 1e-10);
        assert_abs_diff_eq!(t.im, direct.im, epsilon = 1e-10);
    }

    #[test]
    fn trace_product_identity_against_state() {
        let rho = ComplexMatrix::diagonal(&[0.5, 0.5]);
        let id = ComplexMatrix::identity(2);
        assert_abs_diff_eq!(
            trace_product_real(&id, &rho).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        let z = ComplexMatrix::diagonal(&[1.0, -1.0]);
        assert_abs_diff_eq!(trace_product_real(&z, &rho).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn trace_product_shape_mismatch() {
        let a = ComplexMatrix::identity(2);
        let b = ComplexMatrix::identity(3);
        assert!(matches!(
            trace_product(&a, &b),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
