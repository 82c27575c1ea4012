//! Variational objectives for the five estimated quantities, in exact-trace
//! and sampled modes, plus their gradients and the training loop.
//!
//! Every objective is an affine or logarithmic combination of trace terms
//! `Tr[H ρ]` and `Tr[e^{βH} ρ]` of the Hermitian ansatz
//! `H(w,θ) = Σ_i f_w(i) U(θ)|i⟩⟨i|U†(θ)`. Because the ansatz is diagonal
//! in the rotated basis, every term reduces to an expectation of `f_w` or
//! `e^{β f_w}` under the circuit's outcome distribution, which is what the
//! sampled mode estimates with `n` measurement shots per term.
//!
//! Exact-trace mode replaces each sample mean with the full sum over the
//! outcome distribution. It is noise-free and is used as the testing oracle
//! for gradients and bound directions; sampled mode is the algorithm.

mod gradients;
mod train;

pub use gradients::{
    finite_diff_theta_exact, finite_diff_w, grad_theta_exact, grad_theta_sampled, grad_w,
    max_relative_error, ModelGradient,
};
pub use train::{
    estimate_quantity, train, EstimateReport, EvalStrategy, ModelSpec, OptimizerKind,
    TrainingConfig, TrainingTrace,
};

use serde::{Deserialize, Serialize};

use crate::circuit::{self, CircuitLayout, CircuitParams};
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::neural::{self, MlpParams};
use crate::state::DensityOperator;

/// Which quantity an objective estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    MeasuredRelEnt,
    VonNeumann,
    MeasuredRenyi,
    Renyi,
    RootFidelity,
}

impl Quantity {
    /// Does the quantity compare two states (as opposed to one state
    /// against the maximally mixed reference)?
    pub fn needs_sigma(self) -> bool {
        matches!(
            self,
            Quantity::MeasuredRelEnt | Quantity::MeasuredRenyi | Quantity::RootFidelity
        )
    }

    /// Does the quantity take a Rényi order?
    pub fn needs_alpha(self) -> bool {
        matches!(self, Quantity::MeasuredRenyi | Quantity::Renyi)
    }
}

/// Optimization direction of the variational form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Maximize,
    Minimize,
}

/// A quantity descriptor: what to estimate and, for Rényi variants, the
/// order α ∈ (0,1) ∪ (1,∞).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    quantity: Quantity,
    alpha: Option<f64>,
}

impl Objective {
    pub fn new(quantity: Quantity, alpha: Option<f64>) -> Result<Self> {
        match (quantity.needs_alpha(), alpha) {
            (true, Some(a)) => {
                if a <= 0.0 || (a - 1.0).abs() < 1e-12 {
                    return Err(Error::InvalidConfig(format!(
                        "Rényi order {a} must lie in (0,1) ∪ (1,∞)"
                    )));
                }
            }
            (true, None) => {
                return Err(Error::InvalidConfig(
                    "Rényi quantities require an order α".into(),
                ))
            }
            (false, Some(_)) => {
                return Err(Error::InvalidConfig(
                    "only Rényi quantities take an order α".into(),
                ))
            }
            (false, None) => {}
        }
        Ok(Self { quantity, alpha })
    }

    pub fn measured_rel_ent() -> Self {
        Self::new(Quantity::MeasuredRelEnt, None).unwrap()
    }

    pub fn von_neumann() -> Self {
        Self::new(Quantity::VonNeumann, None).unwrap()
    }

    pub fn measured_renyi(alpha: f64) -> Result<Self> {
        Self::new(Quantity::MeasuredRenyi, Some(alpha))
    }

    pub fn renyi(alpha: f64) -> Result<Self> {
        Self::new(Quantity::Renyi, Some(alpha))
    }

    pub fn root_fidelity() -> Self {
        Self::new(Quantity::RootFidelity, None).unwrap()
    }

    pub fn quantity(&self) -> Quantity {
        self.quantity
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    /// All quantities maximize their inner objective except root fidelity,
    /// which minimizes a variational upper bound.
    pub fn direction(&self) -> Direction {
        match self.quantity {
            Quantity::RootFidelity => Direction::Minimize,
            _ => Direction::Maximize,
        }
    }

    /// Trace terms making up the inner objective.
    pub(crate) fn terms(&self) -> Vec<TermSpec> {
        match self.quantity {
            Quantity::MeasuredRelEnt => vec![
                TermSpec::affine(StateRole::Rho, TermKind::Linear, 1.0),
                TermSpec::affine(StateRole::Sigma, TermKind::exp(1.0), -1.0),
            ],
            Quantity::VonNeumann => vec![
                TermSpec::affine(StateRole::Rho, TermKind::Linear, 1.0),
                TermSpec::affine(StateRole::Sigma, TermKind::exp(1.0), -1.0),
            ],
            Quantity::MeasuredRenyi | Quantity::Renyi => {
                let alpha = self.alpha.expect("validated at construction");
                vec![
                    TermSpec::log(
                        StateRole::Rho,
                        TermKind::exp(alpha - 1.0),
                        alpha / (alpha - 1.0),
                    ),
                    TermSpec::log(StateRole::Sigma, TermKind::exp(alpha), -1.0),
                ]
            }
            Quantity::RootFidelity => vec![
                TermSpec::affine(StateRole::Rho, TermKind::exp(-1.0), 0.5),
                TermSpec::affine(StateRole::Sigma, TermKind::exp(1.0), 0.5),
            ],
        }
    }

    /// Additive constant of the inner objective.
    pub(crate) fn constant(&self) -> f64 {
        match self.quantity {
            Quantity::MeasuredRelEnt => 1.0,
            _ => 0.0,
        }
    }

    /// Map the inner objective value to the quantity estimate.
    ///
    /// Entropies enter their variational forms through an affine wrapper:
    /// `ln d - 1 - value` for von Neumann, `ln d - value` for Rényi. The
    /// relative quantities and root fidelity are estimated directly.
    pub fn estimate_from_raw(&self, dim: usize, raw: f64) -> f64 {
        let ln_d = (dim as f64).ln();
        match self.quantity {
            Quantity::VonNeumann => ln_d - 1.0 - raw,
            Quantity::Renyi => ln_d - raw,
            _ => raw,
        }
    }
}

/// The second state of a variational form: an explicit density operator or
/// the maximally mixed state, whose outcome distribution is uniform for
/// every circuit and is therefore evaluated analytically.
#[derive(Clone, Copy)]
pub enum SigmaState<'a> {
    State(&'a DensityOperator),
    MaximallyMixed,
}

/// Eigenvalue model of the Hermitian ansatz: a neural network over index
/// bits, or an explicit per-index table (the no-network baseline).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EigenvalueModel {
    Neural(MlpParams),
    Explicit(Vec<f64>),
}

impl EigenvalueModel {
    /// Number of trainable parameters.
    pub fn num_params(&self) -> usize {
        match self {
            EigenvalueModel::Neural(p) => p.num_params(),
            EigenvalueModel::Explicit(v) => v.len(),
        }
    }

    /// Eigenvalue proxies `f(i)` for every basis index of a `dim`-level
    /// system.
    pub fn values(&self, dim: usize) -> Result<Vec<f64>> {
        let vals = match self {
            EigenvalueModel::Neural(p) => {
                if (1usize << p.input_dim) != dim {
                    return Err(Error::DimensionMismatch(format!(
                        "network input width {} addresses {} indices, state has {dim}",
                        p.input_dim,
                        1usize << p.input_dim
                    )));
                }
                (0..dim)
                    .map(|i| neural::forward(p, i))
                    .collect::<Result<Vec<f64>>>()?
            }
            EigenvalueModel::Explicit(v) => {
                if v.len() != dim {
                    return Err(Error::DimensionMismatch(format!(
                        "explicit eigenvalue table has {} entries, state has {dim}",
                        v.len()
                    )));
                }
                v.clone()
            }
        };
        if let Some(bad) = vals.iter().find(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure(format!(
                "eigenvalue model produced non-finite value {bad}"
            )));
        }
        Ok(vals)
    }
}

/// Parameterized Hermitian operator
/// `H(w,θ) = Σ_i f_w(i) U(θ)|i⟩⟨i|U†(θ)`.
#[derive(Debug, Clone)]
pub struct HermitianAnsatz {
    pub layout: CircuitLayout,
    pub theta: CircuitParams,
    pub eigenvalues: EigenvalueModel,
}

impl HermitianAnsatz {
    pub fn new(layout: CircuitLayout, theta: CircuitParams, eigenvalues: EigenvalueModel) -> Self {
        Self {
            layout,
            theta,
            eigenvalues,
        }
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    /// `f_w(i)` for every basis index.
    pub fn eigenvalue_table(&self) -> Result<Vec<f64>> {
        self.eigenvalues.values(self.dim())
    }

    /// Dense matrix form `Σ_i f(i) u_i u_i†` with `u_i` the columns of
    /// `U(θ)`. Hermitian by construction; used by structural tests.
    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        let u = circuit::build_unitary(&self.layout, &self.theta)?;
        let f = self.eigenvalue_table()?;
        Ok(crate::linalg::reassemble(&u, &f))
    }
}

/// Outcome samples backing one sampled objective evaluation: `n` indices
/// drawn from the ρ distribution and either `n` indices from the σ
/// distribution or the analytic marker for the maximally mixed reference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleBatch {
    pub rho_samples: Vec<usize>,
    pub sigma_samples: SigmaSamples,
}

/// σ-side of a batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SigmaSamples {
    /// Measurement outcomes from the σ distribution (or, in the uniform
    /// sampling fallback, classical uniform draws).
    Indices(Vec<usize>),
    /// Evaluate the maximally-mixed term analytically as `(1/d) Σ_i g(f(i))`.
    UniformAnalytic,
}

/// How the maximally-mixed term is handled when generating batches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PiTermMode {
    /// Full sum over all `d` indices (default; exact and noise-free).
    Analytic,
    /// Classical uniform sampling, mirroring the measurement-free sampling
    /// option for the reference state.
    Sampled,
}

/// Draw a fresh batch at the ansatz's current θ.
pub fn generate_batch(
    rho: &DensityOperator,
    sigma: SigmaState,
    layout: &CircuitLayout,
    theta: &CircuitParams,
    n: usize,
    pi_mode: PiTermMode,
    rng: &mut impl rand::Rng,
) -> Result<SampleBatch> {
    if n == 0 {
        return Err(Error::InvalidConfig("need at least one sample per term".into()));
    }
    let rho_samples = circuit::sample_outcomes(rho, layout, theta, n, rng)?;
    let sigma_samples = match sigma {
        SigmaState::State(s) => {
            SigmaSamples::Indices(circuit::sample_outcomes(s, layout, theta, n, rng)?)
        }
        SigmaState::MaximallyMixed => match pi_mode {
            PiTermMode::Analytic => SigmaSamples::UniformAnalytic,
            PiTermMode::Sampled => {
                let d = layout.dim();
                SigmaSamples::Indices((0..n).map(|_| rng.gen_range(0..d)).collect())
            }
        },
    };
    Ok(SampleBatch {
        rho_samples,
        sigma_samples,
    })
}

/// Evaluation mode of an objective: full trace sums or a sampled batch.
#[derive(Clone, Copy)]
pub enum EvalMode<'a> {
    Exact,
    Sampled(&'a SampleBatch),
}

/// Which state a trace term runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum StateRole {
    Rho,
    Sigma,
}

/// The expectation inside a trace term: `f` itself or `e^{β f}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum TermKind {
    Linear,
    Exp { beta: f64 },
}

impl TermKind {
    pub(crate) fn exp(beta: f64) -> Self {
        TermKind::Exp { beta }
    }

    /// Per-index integrand.
    fn apply(self, f: f64) -> f64 {
        match self {
            TermKind::Linear => f,
            TermKind::Exp { beta } => (beta * f).exp(),
        }
    }

    /// Per-index derivative of the integrand with respect to `f(i)`.
    fn derivative(self, f: f64) -> f64 {
        match self {
            TermKind::Linear => 1.0,
            TermKind::Exp { beta } => beta * (beta * f).exp(),
        }
    }
}

/// Outer composition applied to a term's expectation value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Outer {
    Affine { weight: f64 },
    Log { weight: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct TermSpec {
    pub role: StateRole,
    pub kind: TermKind,
    pub outer: Outer,
}

impl TermSpec {
    fn affine(role: StateRole, kind: TermKind, weight: f64) -> Self {
        TermSpec {
            role,
            kind,
            outer: Outer::Affine { weight },
        }
    }

    fn log(role: StateRole, kind: TermKind, weight: f64) -> Self {
        TermSpec {
            role,
            kind,
            outer: Outer::Log { weight },
        }
    }

    /// Contribution of the term to the objective given its expectation.
    fn compose(&self, expectation: f64) -> Result<f64> {
        match self.outer {
            Outer::Affine { weight } => Ok(weight * expectation),
            Outer::Log { weight } => {
                if expectation <= 0.0 {
                    return Err(Error::DegenerateBatch { mean: expectation });
                }
                Ok(weight * expectation.ln())
            }
        }
    }

    /// d(composition)/d(expectation), used by the chain rule in both
    /// gradient paths. Log terms divide by the unshifted expectation.
    pub(crate) fn chain_coefficient(&self, expectation: f64) -> Result<f64> {
        match self.outer {
            Outer::Affine { weight } => Ok(weight),
            Outer::Log { weight } => {
                if expectation <= 0.0 {
                    return Err(Error::DegenerateBatch { mean: expectation });
                }
                Ok(weight / expectation)
            }
        }
    }
}

fn check_dims(
    ansatz: &HermitianAnsatz,
    rho: &DensityOperator,
    sigma: SigmaState,
) -> Result<()> {
    if rho.dim() != ansatz.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state dimension {} does not match ansatz dimension {}",
            rho.dim(),
            ansatz.dim()
        )));
    }
    if let SigmaState::State(s) = sigma {
        if s.dim() != ansatz.dim() {
            return Err(Error::DimensionMismatch(format!(
                "second state dimension {} does not match ansatz dimension {}",
                s.dim(),
                ansatz.dim()
            )));
        }
    }
    Ok(())
}

/// `Tr[e^{β H(w,θ)} state] = Σ_i dist(i) e^{β f_w(i)}` where `dist` is the
/// circuit's outcome distribution for `state`. `β = 0` degenerates to 1.
pub fn eval_trace_terms_exact(
    ansatz: &HermitianAnsatz,
    state: &DensityOperator,
    beta: f64,
) -> Result<f64> {
    check_dims(ansatz, state, SigmaState::MaximallyMixed)?;
    let dist = circuit::outcome_distribution(state, &ansatz.layout, &ansatz.theta)?;
    let f = ansatz.eigenvalue_table()?;
    Ok(expectation_exact(TermKind::exp(beta), &dist, &f))
}

/// `Tr[H(w,θ) state] = Σ_i dist(i) f_w(i)`.
pub fn eval_linear_term_exact(ansatz: &HermitianAnsatz, state: &DensityOperator) -> Result<f64> {
    check_dims(ansatz, state, SigmaState::MaximallyMixed)?;
    let dist = circuit::outcome_distribution(state, &ansatz.layout, &ansatz.theta)?;
    let f = ansatz.eigenvalue_table()?;
    Ok(expectation_exact(TermKind::Linear, &dist, &f))
}

pub(crate) fn expectation_exact(kind: TermKind, dist: &[f64], f: &[f64]) -> f64 {
    dist.iter()
        .zip(f)
        .map(|(&w, &fi)| w * kind.apply(fi))
        .sum()
}

pub(crate) fn expectation_uniform_analytic(kind: TermKind, f: &[f64]) -> f64 {
    let d = f.len() as f64;
    f.iter().map(|&fi| kind.apply(fi)).sum::<f64>() / d
}

pub(crate) fn expectation_sampled(kind: TermKind, samples: &[usize], f: &[f64]) -> f64 {
    let n = samples.len() as f64;
    samples.iter().map(|&i| kind.apply(f[i])).sum::<f64>() / n
}

/// Expectation of a term in the given mode, with the distribution for the
/// term's state supplied lazily in exact mode.
pub(crate) fn term_expectation(
    term: &TermSpec,
    ansatz: &HermitianAnsatz,
    rho: &DensityOperator,
    sigma: SigmaState,
    mode: EvalMode,
    f: &[f64],
) -> Result<f64> {
    match mode {
        EvalMode::Exact => match (term.role, sigma) {
            (StateRole::Rho, _) => {
                let dist = circuit::outcome_distribution(rho, &ansatz.layout, &ansatz.theta)?;
                Ok(expectation_exact(term.kind, &dist, f))
            }
            (StateRole::Sigma, SigmaState::State(s)) => {
                let dist = circuit::outcome_distribution(s, &ansatz.layout, &ansatz.theta)?;
                Ok(expectation_exact(term.kind, &dist, f))
            }
            (StateRole::Sigma, SigmaState::MaximallyMixed) => {
                Ok(expectation_uniform_analytic(term.kind, f))
            }
        },
        EvalMode::Sampled(batch) => match term.role {
            StateRole::Rho => Ok(expectation_sampled(term.kind, &batch.rho_samples, f)),
            StateRole::Sigma => match &batch.sigma_samples {
                SigmaSamples::Indices(samples) => Ok(expectation_sampled(term.kind, samples, f)),
                SigmaSamples::UniformAnalytic => Ok(expectation_uniform_analytic(term.kind, f)),
            },
        },
    }
}

/// Inner optimization target (the quantity being ascended or descended),
/// before the entropy wrappers.
pub fn raw_objective(
    obj: &Objective,
    ansatz: &HermitianAnsatz,
    rho: &DensityOperator,
    sigma: SigmaState,
    mode: EvalMode,
) -> Result<f64> {
    check_dims(ansatz, rho, sigma)?;
    let f = ansatz.eigenvalue_table()?;
    let mut acc = obj.constant();
    for term in obj.terms() {
        let e = term_expectation(&term, ansatz, rho, sigma, mode, &f)?;
        acc += term.compose(e)?;
    }
    Ok(acc)
}

/// Objective value mapped to the quantity's scale (entropy wrappers
/// applied). In exact mode every sample mean is replaced by the full sum
/// over the outcome distribution.
pub fn objective_value(
    obj: &Objective,
    ansatz: &HermitianAnsatz,
    rho: &DensityOperator,
    sigma: SigmaState,
    mode: EvalMode,
) -> Result<f64> {
    let raw = raw_objective(obj, ansatz, rho, sigma, mode)?;
    Ok(obj.estimate_from_raw(ansatz.dim(), raw))
}
