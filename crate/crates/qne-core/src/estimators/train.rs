//! The training loop: simultaneous gradient steps on the circuit angles
//! (parameter shift) and the eigenvalue model (backpropagation), following
//! the estimate of the objective across epochs.
//!
//! Per epoch, both gradients are evaluated at the current parameters before
//! either block is updated; the recorded value is the objective at the
//! updated parameters, so the last entry of a trace is the run's estimate.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{CircuitLayout, CircuitParams};
use crate::error::{Error, Result};
use crate::oracle;
use crate::rng::{self, TAG_RUN};
use crate::state::DensityOperator;

use super::gradients::{grad_theta_exact, grad_theta_sampled, grad_w, ModelGradient};
use super::{
    generate_batch, raw_objective, EigenvalueModel, EvalMode, HermitianAnsatz, Objective,
    PiTermMode, Quantity, SigmaState,
};
use crate::neural::MlpParams;

/// Gradient update rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    PlainGradient,
    Adam {
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    },
}

impl OptimizerKind {
    pub fn adam_default() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Hyperparameters of one training run (plus the seed and repetition count
/// used by the multi-run driver).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    /// Number of epochs K.
    pub epochs: usize,
    /// Learning rate η.
    pub learning_rate: f64,
    /// Samples per trace term n.
    pub samples_per_term: usize,
    pub optimizer: OptimizerKind,
    pub master_seed: u64,
    /// Independent repetitions aggregated by `estimate_quantity`.
    pub runs: usize,
}

impl TrainingConfig {
    /// Calibrated defaults: η = 0.05 plain gradient, n = 100, K = 1000
    /// for up-to-two-qubit systems and 3000 for six-qubit systems, 10 runs.
    pub fn defaults_for(num_qubits: usize) -> Self {
        TrainingConfig {
            epochs: if num_qubits >= 6 { 3000 } else { 1000 },
            learning_rate: 0.05,
            samples_per_term: 100,
            optimizer: OptimizerKind::PlainGradient,
            master_seed: 0,
            runs: 10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("need at least one epoch".into()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "learning rate {} must be finite and non-negative",
                self.learning_rate
            )));
        }
        if self.samples_per_term == 0 {
            return Err(Error::InvalidConfig("need at least one sample per term".into()));
        }
        if self.runs == 0 {
            return Err(Error::InvalidConfig("need at least one run".into()));
        }
        Ok(())
    }
}

/// Which eigenvalue model a run trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelSpec {
    /// One-hidden-layer network over index bits.
    Neural { hidden_dim: usize },
    /// Explicit per-index eigenvalue table (the no-network baseline).
    Explicit,
}

impl ModelSpec {
    /// Default hidden width by system size: 10 for two qubits, 30 for six.
    pub fn default_hidden(num_qubits: usize) -> usize {
        5 * num_qubits.max(2)
    }

    pub(crate) fn variant_tag(self) -> u64 {
        match self {
            ModelSpec::Neural { .. } => 0,
            ModelSpec::Explicit => 1,
        }
    }

    /// Human-readable variant label used in trace output.
    pub fn label(self) -> &'static str {
        match self {
            ModelSpec::Neural { .. } => "neural",
            ModelSpec::Explicit => "explicit",
        }
    }
}

/// Objective evaluation strategy for a whole run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalStrategy {
    /// The algorithm: sample means with `n` shots per term.
    Sampled,
    /// Noise-free full-distribution sums; the testing oracle.
    ExactTrace,
}

/// Record of one training run.
#[derive(Debug, Clone)]
pub struct TrainingTrace {
    /// Inner objective value per epoch.
    pub objectives: Vec<f64>,
    /// Quantity estimate per epoch (entropy wrappers applied).
    pub estimates: Vec<f64>,
    /// Wall time per epoch, seconds. Not serialized into experiment
    /// outputs, which must be byte-reproducible.
    pub epoch_seconds: Vec<f64>,
    /// Parameters after the last update.
    pub final_params: Option<FinalParams>,
}

/// Final trained parameters: circuit angles reduced to `[0, 2π)` plus the
/// eigenvalue model.
#[derive(Debug, Clone)]
pub struct FinalParams {
    pub theta: Vec<f64>,
    pub eigenvalues: EigenvalueModel,
}

impl TrainingTrace {
    fn with_capacity(epochs: usize) -> Self {
        TrainingTrace {
            objectives: Vec::with_capacity(epochs),
            estimates: Vec::with_capacity(epochs),
            epoch_seconds: Vec::with_capacity(epochs),
            final_params: None,
        }
    }

    pub fn len(&self) -> usize {
        self.objectives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objectives.is_empty()
    }
}

/// Outcome of one run: the trace and the final objective (the estimate).
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub trace: TrainingTrace,
    pub estimate: f64,
}

/// First-moment/second-moment state for one parameter block.
struct BlockOptimizer {
    kind: OptimizerKind,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl BlockOptimizer {
    fn new(kind: OptimizerKind, len: usize) -> Self {
        BlockOptimizer {
            kind,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    /// In-place ascent (`sign = +1`) or descent (`sign = -1`) step.
    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64, sign: f64) {
        match self.kind {
            OptimizerKind::PlainGradient => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p += sign * lr * g;
                }
            }
            OptimizerKind::Adam {
                beta1,
                beta2,
                epsilon,
            } => {
                self.t += 1;
                let bc1 = 1.0 - beta1.powi(self.t);
                let bc2 = 1.0 - beta2.powi(self.t);
                for ((p, g), (m, v)) in params
                    .iter_mut()
                    .zip(grad)
                    .zip(self.m.iter_mut().zip(self.v.iter_mut()))
                {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    let m_hat = *m / bc1;
                    let v_hat = *v / bc2;
                    *p += sign * lr * m_hat / (v_hat.sqrt() + epsilon);
                }
            }
        }
    }
}

fn apply_model_step(
    model: &mut EigenvalueModel,
    grad: &ModelGradient,
    opt: &mut BlockOptimizer,
    lr: f64,
    sign: f64,
) {
    match (model, grad) {
        (EigenvalueModel::Neural(p), ModelGradient::Neural(g)) => {
            let mut flat = p.flatten();
            opt.step(&mut flat, &g.flatten(), lr, sign);
            *p = MlpParams::from_flat(p.input_dim, p.hidden_dim, &flat);
        }
        (EigenvalueModel::Explicit(values), ModelGradient::Explicit(g)) => {
            opt.step(values, g, lr, sign);
        }
        _ => unreachable!("model and gradient shapes are produced together"),
    }
}

/// One training run of the variational estimator.
///
/// Initializes the eigenvalue model (Glorot for the network, uniform
/// `[0, 1]` for the explicit table) and θ uniform in `[0, 2π)^q`, then for
/// each of `config.epochs` epochs evaluates both gradients at the current
/// parameters, steps both blocks with learning rate η in the objective's
/// direction, and records the objective at the updated parameters. The
/// returned estimate is the final recorded objective, with the quantity's
/// affine wrapper applied.
pub fn train(
    obj: &Objective,
    layout: &CircuitLayout,
    rho: &DensityOperator,
    sigma: SigmaState,
    model_spec: ModelSpec,
    config: &TrainingConfig,
    strategy: EvalStrategy,
    rng: &mut impl rand::Rng,
) -> Result<TrainOutcome> {
    config.validate()?;
    let dim = layout.dim();
    if rho.dim() != dim {
        return Err(Error::DimensionMismatch(format!(
            "state dimension {} does not match circuit dimension {dim}",
            rho.dim()
        )));
    }

    let model = match model_spec {
        ModelSpec::Neural { hidden_dim } => EigenvalueModel::Neural(MlpParams::glorot(
            layout.num_qubits(),
            hidden_dim,
            rng,
        )),
        ModelSpec::Explicit => {
            EigenvalueModel::Explicit((0..dim).map(|_| rng.gen_range(0.0..1.0)).collect())
        }
    };
    let theta = CircuitParams::random(layout, rng);
    let mut ansatz = HermitianAnsatz::new(layout.clone(), theta, model);

    let sign = match obj.direction() {
        super::Direction::Maximize => 1.0,
        super::Direction::Minimize => -1.0,
    };
    let n = config.samples_per_term;
    let mut theta_opt = BlockOptimizer::new(config.optimizer, ansatz.layout.num_params());
    let mut w_opt = BlockOptimizer::new(config.optimizer, ansatz.eigenvalues.num_params());
    let mut trace = TrainingTrace::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let started = Instant::now();

        // Both gradients at (w^k, θ^k), before either update.
        let (g_theta, g_w) = match strategy {
            EvalStrategy::Sampled => {
                let g_theta = grad_theta_sampled(obj, &ansatz, rho, sigma, n, rng)?;
                let batch = generate_batch(
                    rho,
                    sigma,
                    &ansatz.layout,
                    &ansatz.theta,
                    n,
                    PiTermMode::Analytic,
                    rng,
                )?;
                let g_w = grad_w(obj, &ansatz, rho, sigma, EvalMode::Sampled(&batch))?;
                (g_theta, g_w)
            }
            EvalStrategy::ExactTrace => {
                let g_theta = grad_theta_exact(obj, &ansatz, rho, sigma)?;
                let g_w = grad_w(obj, &ansatz, rho, sigma, EvalMode::Exact)?;
                (g_theta, g_w)
            }
        };

        theta_opt.step(
            ansatz.theta.values_mut(),
            &g_theta,
            config.learning_rate,
            sign,
        );
        apply_model_step(
            &mut ansatz.eigenvalues,
            &g_w,
            &mut w_opt,
            config.learning_rate,
            sign,
        );

        // Objective at the updated parameters; in sampled mode on a fresh
        // batch, so the last epoch's record is the run's estimate.
        let raw = match strategy {
            EvalStrategy::Sampled => {
                let batch = generate_batch(
                    rho,
                    sigma,
                    &ansatz.layout,
                    &ansatz.theta,
                    n,
                    PiTermMode::Analytic,
                    rng,
                )?;
                raw_objective(obj, &ansatz, rho, sigma, EvalMode::Sampled(&batch))?
            }
            EvalStrategy::ExactTrace => {
                raw_objective(obj, &ansatz, rho, sigma, EvalMode::Exact)?
            }
        };
        let estimate = obj.estimate_from_raw(dim, raw);

        trace.objectives.push(raw);
        trace.estimates.push(estimate);
        trace.epoch_seconds.push(started.elapsed().as_secs_f64());

        if !raw.is_finite() {
            return Err(Error::TrainingDiverged {
                epoch,
                trace: Box::new(trace),
            });
        }
    }

    trace.final_params = Some(FinalParams {
        theta: ansatz.theta.wrapped(),
        eigenvalues: ansatz.eigenvalues.clone(),
    });
    let estimate = *trace.estimates.last().expect("at least one epoch");
    Ok(TrainOutcome { trace, estimate })
}

/// Aggregated result of `runs` independent trainings of one variant.
#[derive(Debug, Clone)]
pub struct EstimateReport {
    /// Final estimate of each run, in run order.
    pub estimates: Vec<f64>,
    pub traces: Vec<TrainingTrace>,
    pub estimate_mean: f64,
    /// Sample standard deviation over runs (0 for a single run).
    pub estimate_std: f64,
    /// Closed-form value when the instance admits one.
    pub ground_truth: Option<f64>,
}

impl EstimateReport {
    /// Mean estimate per epoch across runs.
    pub fn mean_estimate_curve(&self) -> Vec<f64> {
        mean_curve(&self.traces, |t| &t.estimates)
    }

    /// Standard deviation of the estimate per epoch across runs.
    pub fn std_estimate_curve(&self) -> Vec<f64> {
        std_curve(&self.traces, |t| &t.estimates)
    }
}

pub(crate) fn mean_curve<'a>(
    traces: &'a [TrainingTrace],
    field: impl Fn(&'a TrainingTrace) -> &'a [f64],
) -> Vec<f64> {
    let epochs = traces.first().map_or(0, |t| field(t).len());
    let runs = traces.len() as f64;
    (0..epochs)
        .map(|e| traces.iter().map(|t| field(t)[e]).sum::<f64>() / runs)
        .collect()
}

pub(crate) fn std_curve<'a>(
    traces: &'a [TrainingTrace],
    field: impl Fn(&'a TrainingTrace) -> &'a [f64],
) -> Vec<f64> {
    let means = mean_curve(traces, &field);
    let runs = traces.len();
    means
        .iter()
        .enumerate()
        .map(|(e, &m)| {
            if runs < 2 {
                0.0
            } else {
                let var = traces
                    .iter()
                    .map(|t| (field(t)[e] - m).powi(2))
                    .sum::<f64>()
                    / (runs as f64 - 1.0);
                var.sqrt()
            }
        })
        .collect()
}

/// Ground truth for an instance, when one exists: closed forms for the
/// entropies and fidelity, and the commuting-pair reductions for the
/// measured relative quantities (no closed form otherwise).
pub fn ground_truth(
    obj: &Objective,
    rho: &DensityOperator,
    sigma: Option<&DensityOperator>,
) -> Option<f64> {
    match obj.quantity() {
        Quantity::VonNeumann => oracle::von_neumann(rho).ok(),
        Quantity::Renyi => oracle::renyi_entropy(rho, obj.alpha().unwrap()).ok(),
        Quantity::RootFidelity => sigma.and_then(|s| oracle::root_fidelity(rho, s).ok()),
        Quantity::MeasuredRelEnt => {
            let s = sigma?;
            commuting_pd(rho, s).then(|| oracle::quantum_rel_ent(rho, s).ok())?
        }
        Quantity::MeasuredRenyi => {
            let s = sigma?;
            commuting_pd(rho, s)
                .then(|| oracle::sandwiched_renyi(rho, s, obj.alpha().unwrap()).ok())?
        }
    }
}

fn commuting_pd(rho: &DensityOperator, sigma: &DensityOperator) -> bool {
    if rho.dim() != sigma.dim() {
        return false;
    }
    let commuting = rho.matrix().commutator_norm(sigma.matrix()) <= 1e-8;
    let pd = |s: &DensityOperator| {
        s.eigenvalues()
            .map(|e| e[0] > crate::constants::SINGULAR_TOL)
            .unwrap_or(false)
    };
    commuting && pd(rho) && pd(sigma)
}

/// Run `config.runs` independent trainings (in parallel, one RNG stream per
/// run) and aggregate the final estimates. For entropy quantities the
/// second state is the maximally mixed reference and `sigma` is ignored.
pub fn estimate_quantity(
    obj: &Objective,
    rho: &DensityOperator,
    sigma: Option<&DensityOperator>,
    layout: &CircuitLayout,
    model_spec: ModelSpec,
    config: &TrainingConfig,
    strategy: EvalStrategy,
) -> Result<EstimateReport> {
    config.validate()?;
    let sigma_state = if obj.quantity().needs_sigma() {
        match sigma {
            Some(s) => SigmaState::State(s),
            None => {
                return Err(Error::InvalidConfig(format!(
                    "{:?} requires a second state",
                    obj.quantity()
                )))
            }
        }
    } else {
        SigmaState::MaximallyMixed
    };

    let truth = ground_truth(obj, rho, sigma);
    let outcomes: Result<Vec<TrainOutcome>> = (0..config.runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = rng::stream(
                config.master_seed,
                &[TAG_RUN, model_spec.variant_tag(), run as u64],
            );
            train(
                obj,
                layout,
                rho,
                sigma_state,
                model_spec,
                config,
                strategy,
                &mut rng,
            )
        })
        .collect();
    let outcomes = outcomes?;

    let estimates: Vec<f64> = outcomes.iter().map(|o| o.estimate).collect();
    let mean = estimates.iter().sum::<f64>() / estimates.len() as f64;
    let std = if estimates.len() < 2 {
        0.0
    } else {
        (estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>()
            / (estimates.len() as f64 - 1.0))
            .sqrt()
    };
    Ok(EstimateReport {
        estimates,
        traces: outcomes.into_iter().map(|o| o.trace).collect(),
        estimate_mean: mean,
        estimate_std: std,
        ground_truth: truth,
    })
}
