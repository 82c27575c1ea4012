//! Multi-variant experiment driver and its serialized outputs.
//!
//! An experiment trains the requested estimator variants (neural and/or
//! explicit baseline) for `runs` independent repetitions each, then emits
//! a per-epoch trace CSV and a summary JSON. All primary outputs are
//! byte-reproducible for a fixed config and seed: run streams derive from
//! `(master_seed, variant, run_index)`, results assemble in run order, and
//! wall-clock timings never enter the serialized forms.
//!
//! Formats:
//! - single-run trace CSV: header `run,epoch,objective,estimate`;
//! - experiment trace CSV: header `run,epoch,objective,estimate,variant`;
//! - summary JSON: `quantity`, `alpha`, `estimate_mean`, `estimate_std`,
//!   `ground_truth`, `runs`, `epochs`, `seed` (for the first variant, the
//!   neural estimator when enabled), plus a `variants` array carrying
//!   per-variant run estimates and per-epoch mean/std curves.
//!
//! CSV floats carry 9 significant digits; JSON floats use the shortest
//! representation that round-trips the exact binary value.

use serde::Serialize;

use crate::circuit::CircuitLayout;
use crate::error::Result;
use crate::estimators::{
    estimate_quantity, EstimateReport, EvalStrategy, ModelSpec, Objective, Quantity,
    TrainingConfig, TrainingTrace,
};
use crate::state::DensityOperator;

/// Everything needed to run one experiment.
pub struct ExperimentSpec<'a> {
    pub objective: Objective,
    pub rho: &'a DensityOperator,
    pub sigma: Option<&'a DensityOperator>,
    pub layout: &'a CircuitLayout,
    /// Variants to train, in output order.
    pub variants: Vec<ModelSpec>,
    pub config: TrainingConfig,
    pub strategy: EvalStrategy,
}

/// Per-variant aggregated outcome.
pub struct ExperimentResult {
    pub objective: Objective,
    pub config: TrainingConfig,
    pub variants: Vec<(ModelSpec, EstimateReport)>,
}

/// Train every requested variant.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    let mut variants = Vec::with_capacity(spec.variants.len());
    for &model in &spec.variants {
        let report = estimate_quantity(
            &spec.objective,
            spec.rho,
            spec.sigma,
            spec.layout,
            model,
            &spec.config,
            spec.strategy,
        )?;
        variants.push((model, report));
    }
    Ok(ExperimentResult {
        objective: spec.objective,
        config: spec.config.clone(),
        variants,
    })
}

/// Fixed-width float form for CSV cells: 9 significant digits.
pub fn csv_float(x: f64) -> String {
    format!("{x:.8e}")
}

/// Single-run trace CSV (`run,epoch,objective,estimate`). Epochs are
/// 1-based to match "estimate after k epochs".
pub fn trace_csv(run: usize, trace: &TrainingTrace) -> String {
    let mut out = String::from("run,epoch,objective,estimate\n");
    push_trace_rows(&mut out, run, trace, None);
    out
}

fn push_trace_rows(out: &mut String, run: usize, trace: &TrainingTrace, variant: Option<&str>) {
    for (epoch, (obj, est)) in trace
        .objectives
        .iter()
        .zip(&trace.estimates)
        .enumerate()
    {
        out.push_str(&format!(
            "{run},{},{},{}",
            epoch + 1,
            csv_float(*obj),
            csv_float(*est)
        ));
        if let Some(v) = variant {
            out.push(',');
            out.push_str(v);
        }
        out.push('\n');
    }
}

impl ExperimentResult {
    /// Whole-experiment trace CSV
    /// (`run,epoch,objective,estimate,variant`), ordered by variant then
    /// run then epoch.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("run,epoch,objective,estimate,variant\n");
        for (model, report) in &self.variants {
            for (run, trace) in report.traces.iter().enumerate() {
                push_trace_rows(&mut out, run, trace, Some(model.label()));
            }
        }
        out
    }

    /// The headline report: first variant in output order.
    pub fn primary_report(&self) -> &EstimateReport {
        &self.variants[0].1
    }

    /// Summary JSON (see module docs for the schema).
    pub fn summary_json(&self) -> String {
        let primary = self.primary_report();
        let summary = SummaryJson {
            quantity: self.objective.quantity(),
            alpha: self.objective.alpha(),
            estimate_mean: primary.estimate_mean,
            estimate_std: primary.estimate_std,
            ground_truth: primary.ground_truth,
            runs: self.config.runs,
            epochs: self.config.epochs,
            seed: self.config.master_seed,
            variants: self
                .variants
                .iter()
                .map(|(model, report)| VariantSummary {
                    variant: model.label().to_string(),
                    estimate_mean: report.estimate_mean,
                    estimate_std: report.estimate_std,
                    estimates: report.estimates.clone(),
                    per_epoch_mean: report.mean_estimate_curve(),
                    per_epoch_std: report.std_estimate_curve(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&summary).expect("summary serializes")
    }
}

#[derive(Serialize)]
struct SummaryJson {
    quantity: Quantity,
    alpha: Option<f64>,
    estimate_mean: f64,
    estimate_std: f64,
    ground_truth: Option<f64>,
    runs: usize,
    epochs: usize,
    seed: u64,
    variants: Vec<VariantSummary>,
}

#[derive(Serialize)]
struct VariantSummary {
    variant: String,
    estimate_mean: f64,
    estimate_std: f64,
    estimates: Vec<f64>,
    per_epoch_mean: Vec<f64>,
    per_epoch_std: Vec<f64>,
}
