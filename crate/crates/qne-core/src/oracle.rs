//! Closed-form ground truths and independent brute-force identities used to
//! anchor the variational estimators.
//!
//! All values are in nats. Measured relative entropies have no closed form
//! for general pairs; ground truths for them are only produced on commuting
//! positive-definite pairs, where they coincide with the quantum relative
//! entropy and the sandwiched Rényi relative entropy respectively.

use num_complex::Complex64;
use rand_distr::StandardNormal;

use crate::constants::{ENTROPY_EIG_CLAMP, SINGULAR_TOL};
use crate::error::{Error, Result};
use crate::linalg::{
    eig_hermitian, matrix_ln, matrix_power, trace_product_real, ComplexMatrix,
};
use crate::state::DensityOperator;

/// Von Neumann entropy `-Σ λ ln λ`, with `0·ln 0 := 0`.
pub fn von_neumann(rho: &DensityOperator) -> Result<f64> {
    let eigs = rho.eigenvalues()?;
    Ok(-eigs
        .iter()
        .filter(|&&l| l > ENTROPY_EIG_CLAMP)
        .map(|&l| l * l.ln())
        .sum::<f64>())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha <= 0.0 || (alpha - 1.0).abs() < 1e-12 {
        return Err(Error::InvalidConfig(format!(
            "Rényi order {alpha} must lie in (0,1) ∪ (1,∞)"
        )));
    }
    Ok(())
}

/// Rényi entropy `(1/(1-α)) ln Σ λ^α` for `α ∈ (0,1) ∪ (1,∞)`.
pub fn renyi_entropy(rho: &DensityOperator, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let eigs = rho.eigenvalues()?;
    let power_sum: f64 = eigs
        .iter()
        .filter(|&&l| l > ENTROPY_EIG_CLAMP)
        .map(|&l| l.powf(alpha))
        .sum();
    Ok(power_sum.ln() / (1.0 - alpha))
}

/// Fidelity `(Tr[(√ρ σ √ρ)^{1/2}])²`, in `[0, 1]`.
pub fn fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(
            "fidelity needs states of equal dimension".into(),
        ));
    }
    let sqrt_rho = matrix_power(rho.matrix(), 0.5)?;
    let mut inner = sqrt_rho.matmul(sigma.matrix()).matmul(&sqrt_rho);
    inner.hermitize();
    let eigs = eig_hermitian(&inner)?.eigenvalues;
    let root_sum: f64 = eigs.iter().map(|&l| l.max(0.0).sqrt()).sum();
    Ok((root_sum * root_sum).min(1.0))
}

/// Root fidelity `√F`.
pub fn root_fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    Ok(fidelity(rho, sigma)?.sqrt())
}

/// Quantum relative entropy `Tr[ρ (ln ρ - ln σ)]`; requires σ positive
/// definite. Equals the measured relative entropy on commuting
/// positive-definite pairs.
pub fn quantum_rel_ent(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(
            "relative entropy needs states of equal dimension".into(),
        ));
    }
    // Tr[ρ ln ρ] spectrally (tolerates singular ρ via the entropy clamp),
    // Tr[ρ ln σ] through the matrix logarithm.
    let rho_term = -von_neumann(rho)?;
    let ln_sigma = matrix_ln(sigma.matrix())?;
    let cross_term = trace_product_real(rho.matrix(), &ln_sigma)?;
    Ok(rho_term - cross_term)
}

/// Sandwiched Rényi relative entropy
/// `(1/(α-1)) ln Tr[(σ^{(1-α)/2α} ρ σ^{(1-α)/2α})^α]`; requires σ positive
/// definite. Equals the measured Rényi relative entropy on commuting
/// positive-definite pairs.
pub fn sandwiched_renyi(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    alpha: f64,
) -> Result<f64> {
    check_alpha(alpha)?;
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(
            "relative entropy needs states of equal dimension".into(),
        ));
    }
    let sigma_eigs = sigma.eigenvalues()?;
    if sigma_eigs[0] <= SINGULAR_TOL {
        return Err(Error::SingularOperand {
            eigenvalue: sigma_eigs[0],
        });
    }
    let exponent = (1.0 - alpha) / (2.0 * alpha);
    let bread = matrix_power(sigma.matrix(), exponent)?;
    let mut sandwich = bread.matmul(rho.matrix()).matmul(&bread);
    sandwich.hermitize();
    let powered = matrix_power(&sandwich, alpha)?;
    let trace = powered.trace().re;
    Ok(trace.ln() / (alpha - 1.0))
}

/// Donsker–Varadhan objective `Σ p f - Σ q e^f + 1` for explicit
/// distributions and test function values.
pub fn classical_dv_value(p: &[f64], q: &[f64], f: &[f64]) -> Result<f64> {
    if p.len() != q.len() || p.len() != f.len() {
        return Err(Error::DimensionMismatch(
            "distributions and test function must share a length".into(),
        ));
    }
    let linear: f64 = p.iter().zip(f).map(|(pi, fi)| pi * fi).sum();
    let exp: f64 = q.iter().zip(f).map(|(qi, fi)| qi * fi.exp()).sum();
    Ok(linear - exp + 1.0)
}

/// Classical relative entropy `Σ p ln(p/q)` (the DV supremum).
pub fn classical_rel_ent(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(
            "distributions must share a length".into(),
        ));
    }
    let mut acc = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > ENTROPY_EIG_CLAMP {
            if qi <= 0.0 {
                return Err(Error::SingularOperand { eigenvalue: qi });
            }
            acc += pi * (pi / qi).ln();
        }
    }
    Ok(acc)
}

/// Haar-random unitary: QR of a complex Gaussian matrix by modified
/// Gram-Schmidt with the phase convention that makes diagonal R entries
/// real positive.
pub fn haar_unitary(dim: usize, rng: &mut impl rand::Rng) -> ComplexMatrix {
    let mut cols: Vec<Vec<Complex64>> = (0..dim)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(re, im)
                })
                .collect()
        })
        .collect();

    for j in 0..dim {
        for k in 0..j {
            let proj: Complex64 = (0..dim).map(|i| cols[k][i].conj() * cols[j][i]).sum();
            for i in 0..dim {
                let adjustment = proj * cols[k][i];
                cols[j][i] -= adjustment;
            }
        }
        let norm: f64 = cols[j].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for c in &mut cols[j] {
            *c /= norm;
        }
    }

    let mut u = ComplexMatrix::zeros(dim, dim);
    for (j, col) in cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            u[(i, j)] = v;
        }
    }
    u
}

/// Random probability vector with every entry at least `min_eigenvalue`:
/// a flat Dirichlet draw rescaled onto the shrunken simplex.
fn random_spectrum(dim: usize, min_eigenvalue: f64, rng: &mut impl rand::Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..dim).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
    let total: f64 = raw.iter().sum();
    let slack = 1.0 - dim as f64 * min_eigenvalue;
    raw.iter().map(|&r| min_eigenvalue + slack * r / total).collect()
}

/// Commuting positive-definite pair `(V diag(p) V†, V diag(q) V†)` with a
/// shared Haar-random eigenbasis and spectra bounded below by
/// `min_eigenvalue ∈ (0, 1/dim]`.
pub fn make_commuting_pair(
    dim: usize,
    rng: &mut impl rand::Rng,
    min_eigenvalue: f64,
) -> Result<(DensityOperator, DensityOperator)> {
    if min_eigenvalue <= 0.0 || min_eigenvalue > 1.0 / dim as f64 {
        return Err(Error::InvalidConfig(format!(
            "min_eigenvalue {min_eigenvalue} must lie in (0, 1/{dim}]"
        )));
    }
    let v = haar_unitary(dim, rng);
    let p = random_spectrum(dim, min_eigenvalue, rng);
    let q = random_spectrum(dim, min_eigenvalue, rng);
    let make = |spec: &[f64]| -> Result<DensityOperator> {
        let mut m = crate::linalg::reassemble(&v, spec);
        m.hermitize();
        DensityOperator::new(m)
    };
    Ok((make(&p)?, make(&q)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::state::{partial_trace_reference, random_pure_state};
    use approx::assert_abs_diff_eq;

    fn random_density(dim: usize, seed: u64) -> DensityOperator {
        let mut rng = stream(seed, &[2000]);
        let psi = random_pure_state(dim * dim, &mut rng).unwrap();
        partial_trace_reference(&psi, dim).unwrap()
    }

    #[test]
    fn entropy_of_maximally_mixed() {
        let pi4 = DensityOperator::maximally_mixed(4).unwrap();
        assert_abs_diff_eq!(von_neumann(&pi4).unwrap(), 4.0f64.ln(), epsilon = 1e-10);
    }

    #[test]
    fn entropy_of_pure_state_is_zero() {
        let mut rng = stream(50, &[0]);
        let psi = random_pure_state(4, &mut rng).unwrap();
        let rho = psi.to_density().unwrap();
        assert_abs_diff_eq!(von_neumann(&rho).unwrap(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn entropy_of_diagonal_three_quarters() {
        let rho = DensityOperator::from_probabilities(&[0.75, 0.25]).unwrap();
        // -0.75 ln 0.75 - 0.25 ln 0.25 by direct scalar arithmetic.
        let expected = -(0.75f64 * 0.75f64.ln() + 0.25 * 0.25f64.ln());
        assert_abs_diff_eq!(von_neumann(&rho).unwrap(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(von_neumann(&rho).unwrap(), 0.562335, epsilon = 1e-6);
    }

    #[test]
    fn renyi_entropy_examples() {
        let pi8 = DensityOperator::maximally_mixed(8).unwrap();
        assert_abs_diff_eq!(renyi_entropy(&pi8, 2.5).unwrap(), 8.0f64.ln(), epsilon = 1e-10);

        let mut rng = stream(51, &[0]);
        let pure = random_pure_state(4, &mut rng).unwrap().to_density().unwrap();
        assert_abs_diff_eq!(renyi_entropy(&pure, 2.0).unwrap(), 0.0, epsilon = 1e-8);

        let rho = DensityOperator::from_probabilities(&[0.75, 0.25]).unwrap();
        assert_abs_diff_eq!(
            renyi_entropy(&rho, 2.0).unwrap(),
            -(0.625f64.ln()),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(renyi_entropy(&rho, 2.0).unwrap(), 0.470004, epsilon = 1e-6);
    }

    #[test]
    fn renyi_rejects_alpha_one() {
        let rho = DensityOperator::maximally_mixed(2).unwrap();
        assert!(renyi_entropy(&rho, 1.0).is_err());
        assert!(renyi_entropy(&rho, -0.5).is_err());
    }

    #[test]
    fn renyi_approaches_von_neumann_as_alpha_to_one() {
        for seed in 0..10 {
            let rho = random_density(4, 600 + seed);
            let h = von_neumann(&rho).unwrap();
            let h_close = renyi_entropy(&rho, 1.001).unwrap();
            assert!((h_close - h).abs() <= 0.01, "gap {}", (h_close - h).abs());
        }
    }

    #[test]
    fn fidelity_with_itself_is_one() {
        let rho = random_density(4, 52);
        assert_abs_diff_eq!(fidelity(&rho, &rho).unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn fidelity_of_orthogonal_pure_states_is_zero() {
        let a = DensityOperator::from_probabilities(&[1.0, 0.0]).unwrap();
        let b = DensityOperator::from_probabilities(&[0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(fidelity(&a, &b).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn fidelity_of_pure_pair_is_squared_overlap() {
        let mut rng = stream(53, &[0]);
        let psi = random_pure_state(4, &mut rng).unwrap();
        let phi = random_pure_state(4, &mut rng).unwrap();
        let overlap: Complex64 = psi
            .amplitudes()
            .iter()
            .zip(phi.amplitudes())
            .map(|(a, b)| a.conj() * b)
            .sum();
        let f = fidelity(
            &psi.to_density().unwrap(),
            &phi.to_density().unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(f, overlap.norm_sqr(), epsilon = 1e-9);
    }

    #[test]
    fn fidelity_is_symmetric() {
        let rho = random_density(4, 54);
        let sigma = random_density(4, 55);
        let f1 = fidelity(&rho, &sigma).unwrap();
        let f2 = fidelity(&sigma, &rho).unwrap();
        assert_abs_diff_eq!(f1, f2, epsilon = 1e-10);
    }

    #[test]
    fn rel_ent_of_state_with_itself_is_zero() {
        let mut rng = stream(56, &[0]);
        let (rho, _) = make_commuting_pair(4, &mut rng, 0.02).unwrap();
        assert_abs_diff_eq!(quantum_rel_ent(&rho, &rho).unwrap(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn rel_ent_of_commuting_diagonals_matches_scalar_formula() {
        let rho = DensityOperator::from_probabilities(&[0.75, 0.25]).unwrap();
        let sigma = DensityOperator::from_probabilities(&[0.5, 0.5]).unwrap();
        let d = quantum_rel_ent(&rho, &sigma).unwrap();
        let scalar = classical_rel_ent(&[0.75, 0.25], &[0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(d, scalar, epsilon = 1e-12);
        assert_abs_diff_eq!(d, 0.130812, epsilon = 1e-6);
    }

    #[test]
    fn rel_ent_to_maximally_mixed_identity() {
        for seed in 0..5 {
            let rho = random_density(4, 700 + seed);
            let pi = DensityOperator::maximally_mixed(4).unwrap();
            let d = quantum_rel_ent(&rho, &pi).unwrap();
            let h = von_neumann(&rho).unwrap();
            assert_abs_diff_eq!(d, 4.0f64.ln() - h, epsilon = 1e-10);
        }
    }

    #[test]
    fn rel_ent_nonnegative_and_zero_only_at_equality() {
        for seed in 0..100 {
            let mut rng = stream(57, &[seed]);
            let (rho, sigma) = make_commuting_pair(4, &mut rng, 0.01).unwrap();
            let d = quantum_rel_ent(&rho, &sigma).unwrap();
            assert!(d > 0.0, "seed {seed}: D = {d}");
        }
    }

    #[test]
    fn sandwiched_renyi_of_equal_states_is_zero() {
        let mut rng = stream(58, &[0]);
        let (rho, _) = make_commuting_pair(4, &mut rng, 0.02).unwrap();
        assert_abs_diff_eq!(sandwiched_renyi(&rho, &rho, 2.5).unwrap(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn sandwiched_renyi_commuting_matches_scalar_formula() {
        let mut rng = stream(59, &[0]);
        let (rho, sigma) = make_commuting_pair(4, &mut rng, 0.02).unwrap();
        for &alpha in &[0.5, 1.05, 2.5] {
            let quantum = sandwiched_renyi(&rho, &sigma, alpha).unwrap();
            // Shared eigenbasis: reduce to the classical Rényi divergence
            // of the spectra, paired by simultaneous diagonalization.
            let p = simultaneous_spectra(&rho, &sigma);
            let scalar = p
                .iter()
                .map(|&(pi, qi)| pi.powf(alpha) * qi.powf(1.0 - alpha))
                .sum::<f64>()
                .ln()
                / (alpha - 1.0);
            assert_abs_diff_eq!(quantum, scalar, epsilon = 1e-10);
        }
    }

    /// Eigenvalue pairs of commuting states in a shared eigenbasis: the
    /// eigenbasis of ρ diagonalizes σ too.
    fn simultaneous_spectra(rho: &DensityOperator, sigma: &DensityOperator) -> Vec<(f64, f64)> {
        let d = eig_hermitian(rho.matrix()).unwrap();
        let v = d.eigenvectors;
        let sigma_diag = v.adjoint().matmul(sigma.matrix()).matmul(&v);
        (0..rho.dim())
            .map(|i| (d.eigenvalues[i], sigma_diag[(i, i)].re))
            .collect()
    }

    #[test]
    fn sandwiched_half_equals_minus_log_fidelity_on_commuting_pairs() {
        for seed in 0..10 {
            let mut rng = stream(60, &[seed]);
            let (rho, sigma) = make_commuting_pair(4, &mut rng, 0.02).unwrap();
            let d_half = sandwiched_renyi(&rho, &sigma, 0.5).unwrap();
            let f = fidelity(&rho, &sigma).unwrap();
            assert_abs_diff_eq!(d_half, -f.ln(), epsilon = 1e-9);
        }
    }

    #[test]
    fn dv_value_at_optimizer_equals_relative_entropy() {
        let p = [0.75f64, 0.25];
        let q = [0.5f64, 0.5];
        let f: Vec<f64> = p.iter().zip(&q).map(|(pi, qi)| (pi / qi).ln()).collect();
        let value = classical_dv_value(&p, &q, &f).unwrap();
        assert_abs_diff_eq!(
            value,
            classical_rel_ent(&p, &q).unwrap(),
            epsilon = 1e-14
        );

        let zero = classical_dv_value(&p, &q, &[0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(zero, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn dv_dominance_over_random_test_functions() {
        let mut rng = stream(61, &[0]);
        let p = random_spectrum(4, 0.01, &mut rng);
        let q = random_spectrum(4, 0.01, &mut rng);
        let bound = classical_rel_ent(&p, &q).unwrap();
        use rand::Rng;
        for _ in 0..1000 {
            let f: Vec<f64> = (0..4).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let v = classical_dv_value(&p, &q, &f).unwrap();
            assert!(v <= bound + 1e-12, "DV value {v} exceeds bound {bound}");
        }
        // Equality at the optimizer.
        let opt: Vec<f64> = p.iter().zip(&q).map(|(pi, qi)| (pi / qi).ln()).collect();
        assert_abs_diff_eq!(
            classical_dv_value(&p, &q, &opt).unwrap(),
            bound,
            epsilon = 1e-12
        );
    }

    #[test]
    fn commuting_pair_properties() {
        let mut rng = stream(62, &[0]);
        let (rho, sigma) = make_commuting_pair(4, &mut rng, 1e-3).unwrap();
        assert!(rho.matrix().commutator_norm(sigma.matrix()) <= 1e-10);
        assert!(rho.eigenvalues().unwrap()[0] >= 1e-3 - 1e-12);
        assert!(sigma.eigenvalues().unwrap()[0] >= 1e-3 - 1e-12);
    }

    #[test]
    fn commuting_pair_rejects_bad_minimum() {
        let mut rng = stream(62, &[1]);
        assert!(make_commuting_pair(4, &mut rng, 0.3).is_err());
        assert!(make_commuting_pair(4, &mut rng, 0.0).is_err());
    }

    #[test]
    fn haar_unitary_is_unitary_and_deterministic() {
        let u = haar_unitary(8, &mut stream(63, &[0]));
        assert!(crate::linalg::unitarity_defect(&u) <= 1e-12);
        let v = haar_unitary(8, &mut stream(63, &[0]));
        assert_eq!(u, v);
    }

    #[test]
    fn variational_objective_saturates_at_log_ratio_observable() {
        // Exact dense evaluation of Tr[Hρ] - Tr[e^H σ] + 1 at
        // H = ln ρ - ln σ recovers D(ρ‖σ) for positive-definite pairs.
        let mut rng = stream(64, &[0]);
        let (rho, sigma) = make_commuting_pair(4, &mut rng, 0.02).unwrap();
        let h = matrix_ln(rho.matrix())
            .unwrap()
            .sub(&matrix_ln(sigma.matrix()).unwrap());
        let linear = trace_product_real(&h, rho.matrix()).unwrap();
        let exp_h = crate::linalg::matrix_exp(&h).unwrap();
        let exp_term = trace_product_real(&exp_h, sigma.matrix()).unwrap();
        let objective = linear - exp_term + 1.0;
        let truth = quantum_rel_ent(&rho, &sigma).unwrap();
        assert_abs_diff_eq!(objective, truth, epsilon = 1e-9);
    }
}
