//! Parameterized quantum circuits: random layered layouts, dense unitary
//! construction, and computational-basis outcome distributions.
//!
//! Conventions pinned here:
//! - Gate set is `{RX, RY, RZ, CNOT}` with `RP(θ) = exp(-iθP/2)`, so every
//!   rotation generator has eigenvalues ±1/2 and the π/2 parameter-shift
//!   rule is exact.
//! - Gates listed first are applied first; the assembled matrix is
//!   `G_L ··· G_2 G_1`.
//! - Qubit 0 is the most significant bit of a basis index, matching the
//!   big-endian bit encoding used by the eigenvalue network.
//! - The simulator conjugates the full dense matrix (`U† ρ U`) rather than
//!   applying gates to the state one by one; dimensions stay at or below 64
//!   for sampled states.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{DISTRIBUTION_DRIFT_TOL, PROBABILITY_CLAMP};
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::state::DensityOperator;

/// One circuit gate. Rotations carry an index into the parameter vector;
/// CNOT is fixed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Gate {
    Rx { qubit: usize, param_index: usize },
    Ry { qubit: usize, param_index: usize },
    Rz { qubit: usize, param_index: usize },
    Cnot { control: usize, target: usize },
}

impl Gate {
    /// Parameter slot used by this gate, if any.
    pub fn param_index(&self) -> Option<usize> {
        match *self {
            Gate::Rx { param_index, .. }
            | Gate::Ry { param_index, .. }
            | Gate::Rz { param_index, .. } => Some(param_index),
            Gate::Cnot { .. } => None,
        }
    }

    fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::Rx { qubit, .. } | Gate::Ry { qubit, .. } | Gate::Rz { qubit, .. } => {
                vec![qubit]
            }
            Gate::Cnot { control, target } => vec![control, target],
        }
    }
}

/// Serialized gate form: `{"kind": "RX", "qubits": [0], "param_index": 0}`,
/// with `param_index` omitted for CNOT.
#[derive(Debug, Serialize, Deserialize)]
struct GateRecord {
    kind: String,
    qubits: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    param_index: Option<usize>,
}

impl From<&Gate> for GateRecord {
    fn from(g: &Gate) -> Self {
        let kind = match g {
            Gate::Rx { .. } => "RX",
            Gate::Ry { .. } => "RY",
            Gate::Rz { .. } => "RZ",
            Gate::Cnot { .. } => "CNOT",
        };
        GateRecord {
            kind: kind.to_string(),
            qubits: g.qubits(),
            param_index: g.param_index(),
        }
    }
}

impl TryFrom<GateRecord> for Gate {
    type Error = Error;

    fn try_from(r: GateRecord) -> Result<Gate> {
        let single = |r: &GateRecord| -> Result<(usize, usize)> {
            if r.qubits.len() != 1 {
                return Err(Error::Serialization(format!(
                    "{} gate expects one qubit, got {:?}",
                    r.kind, r.qubits
                )));
            }
            let p = r.param_index.ok_or_else(|| {
                Error::Serialization(format!("{} gate is missing param_index", r.kind))
            })?;
            Ok((r.qubits[0], p))
        };
        match r.kind.as_str() {
            "RX" => single(&r).map(|(qubit, param_index)| Gate::Rx { qubit, param_index }),
            "RY" => single(&r).map(|(qubit, param_index)| Gate::Ry { qubit, param_index }),
            "RZ" => single(&r).map(|(qubit, param_index)| Gate::Rz { qubit, param_index }),
            "CNOT" => {
                if r.qubits.len() != 2 {
                    return Err(Error::Serialization(format!(
                        "CNOT expects two qubits, got {:?}",
                        r.qubits
                    )));
                }
                if r.param_index.is_some() {
                    return Err(Error::Serialization("CNOT carries no parameter".into()));
                }
                Ok(Gate::Cnot {
                    control: r.qubits[0],
                    target: r.qubits[1],
                })
            }
            other => Err(Error::Serialization(format!("unknown gate kind {other:?}"))),
        }
    }
}

/// Fixed gate sequence of a parameterized circuit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitLayout {
    num_qubits: usize,
    gates: Vec<Gate>,
    num_params: usize,
}

impl CircuitLayout {
    /// Validating constructor. Rotation parameter indices must be exactly
    /// `{0, ..., q-1}`, each used once.
    pub fn new(num_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::InvalidDimension("circuit needs at least one qubit".into()));
        }
        let mut param_indices = Vec::new();
        for g in &gates {
            for &q in &g.qubits() {
                if q >= num_qubits {
                    return Err(Error::InvalidDimension(format!(
                        "gate qubit {q} out of range for {num_qubits} qubits"
                    )));
                }
            }
            if let Gate::Cnot { control, target } = *g {
                if control == target {
                    return Err(Error::InvalidDimension(
                        "CNOT control and target must differ".into(),
                    ));
                }
            }
            if let Some(p) = g.param_index() {
                param_indices.push(p);
            }
        }
        let num_params = param_indices.len();
        let mut sorted = param_indices.clone();
        sorted.sort_unstable();
        if sorted.iter().enumerate().any(|(i, &p)| i != p) {
            return Err(Error::InvalidConfig(format!(
                "parameter indices must be exactly 0..{num_params}, got {param_indices:?}"
            )));
        }
        Ok(Self {
            num_qubits,
            gates,
            num_params,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Hilbert-space dimension `2^num_qubits`.
    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&LayoutJson::from(self)).expect("layout serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: LayoutJson = serde_json::from_str(text)?;
        raw.try_into()
    }
}

/// Serialized layout form: `{"num_qubits": n, "gates": [...]}`.
#[derive(Debug, Serialize, Deserialize)]
struct LayoutJson {
    num_qubits: usize,
    gates: Vec<GateRecord>,
}

impl From<&CircuitLayout> for LayoutJson {
    fn from(l: &CircuitLayout) -> Self {
        LayoutJson {
            num_qubits: l.num_qubits,
            gates: l.gates.iter().map(GateRecord::from).collect(),
        }
    }
}

impl TryFrom<LayoutJson> for CircuitLayout {
    type Error = Error;

    fn try_from(raw: LayoutJson) -> Result<Self> {
        let gates: Result<Vec<Gate>> = raw.gates.into_iter().map(Gate::try_from).collect();
        CircuitLayout::new(raw.num_qubits, gates?)
    }
}

/// Rotation angles for a layout, in radians. Arithmetic is unrestricted;
/// [`CircuitParams::wrapped`] reduces modulo 2π for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitParams {
    theta: Vec<f64>,
}

impl CircuitParams {
    pub fn new(theta: Vec<f64>) -> Self {
        Self { theta }
    }

    /// All-zero parameter vector for a layout.
    pub fn zeros(layout: &CircuitLayout) -> Self {
        Self {
            theta: vec![0.0; layout.num_params()],
        }
    }

    /// Uniform draw from `[0, 2π)^q`.
    pub fn random(layout: &CircuitLayout, rng: &mut impl rand::Rng) -> Self {
        let theta = (0..layout.num_params())
            .map(|_| rng.gen::<f64>() * std::f64::consts::TAU)
            .collect();
        Self { theta }
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.theta
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    /// Copy with `theta[j]` shifted by `delta`.
    pub fn shifted(&self, j: usize, delta: f64) -> Self {
        let mut theta = self.theta.clone();
        theta[j] += delta;
        Self { theta }
    }

    /// Angles reduced to `[0, 2π)` for reporting and serialization.
    pub fn wrapped(&self) -> Vec<f64> {
        self.theta
            .iter()
            .map(|&t| t.rem_euclid(std::f64::consts::TAU))
            .collect()
    }
}

/// Random layered layout: each layer draws a gate count uniformly from
/// `gates_per_layer`, then each gate picks a kind uniformly from
/// `{RX, RY, RZ, CNOT}` (CNOT only with at least two qubits) on distinct
/// random qubits. Rotation gates receive consecutive parameter indices.
pub fn random_layout(
    num_qubits: usize,
    num_layers: usize,
    gates_per_layer: (usize, usize),
    rng: &mut impl rand::Rng,
) -> Result<CircuitLayout> {
    if num_qubits == 0 {
        return Err(Error::InvalidDimension("circuit needs at least one qubit".into()));
    }
    if num_layers == 0 {
        return Err(Error::InvalidConfig("need at least one layer".into()));
    }
    let (lo, hi) = gates_per_layer;
    if lo < 1 || hi > 8 || lo > hi {
        return Err(Error::InvalidConfig(format!(
            "gates-per-layer range ({lo}, {hi}) must lie within [1, 8]"
        )));
    }

    let mut gates = Vec::new();
    let mut next_param = 0;
    let kinds = if num_qubits >= 2 { 4 } else { 3 };
    for _ in 0..num_layers {
        let count = rng.gen_range(lo..=hi);
        for _ in 0..count {
            match rng.gen_range(0..kinds) {
                0 => {
                    let qubit = rng.gen_range(0..num_qubits);
                    gates.push(Gate::Rx {
                        qubit,
                        param_index: next_param,
                    });
                    next_param += 1;
                }
                1 => {
                    let qubit = rng.gen_range(0..num_qubits);
                    gates.push(Gate::Ry {
                        qubit,
                        param_index: next_param,
                    });
                    next_param += 1;
                }
                2 => {
                    let qubit = rng.gen_range(0..num_qubits);
                    gates.push(Gate::Rz {
                        qubit,
                        param_index: next_param,
                    });
                    next_param += 1;
                }
                _ => {
                    let control = rng.gen_range(0..num_qubits);
                    let mut target = rng.gen_range(0..num_qubits - 1);
                    if target >= control {
                        target += 1;
                    }
                    gates.push(Gate::Cnot { control, target });
                }
            }
        }
    }
    CircuitLayout::new(num_qubits, gates)
}

/// Bit mask selecting `qubit` inside a basis index (qubit 0 = most
/// significant bit).
fn qubit_mask(qubit: usize, num_qubits: usize) -> usize {
    1 << (num_qubits - 1 - qubit)
}

fn rotation_matrix(gate: &Gate, theta: f64) -> [Complex64; 4] {
    let half = theta / 2.0;
    let (c, s) = (half.cos(), half.sin());
    match gate {
        Gate::Rx { .. } => [
            Complex64::new(c, 0.0),
            Complex64::new(0.0, -s),
            Complex64::new(0.0, -s),
            Complex64::new(c, 0.0),
        ],
        Gate::Ry { .. } => [
            Complex64::new(c, 0.0),
            Complex64::new(-s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(c, 0.0),
        ],
        Gate::Rz { .. } => [
            Complex64::new(c, -s),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(c, s),
        ],
        Gate::Cnot { .. } => unreachable!("CNOT has no rotation matrix"),
    }
}

/// Dense unitary for a layout and parameter vector. The first listed gate
/// acts first, so the result is `G_L ··· G_1`.
pub fn build_unitary(layout: &CircuitLayout, params: &CircuitParams) -> Result<ComplexMatrix> {
    if params.len() != layout.num_params() {
        return Err(Error::ParameterMismatch {
            expected: layout.num_params(),
            actual: params.len(),
        });
    }
    let nq = layout.num_qubits();
    let d = layout.dim();
    let mut u = ComplexMatrix::identity(d);

    for gate in layout.gates() {
        match gate {
            Gate::Rx { qubit, param_index }
            | Gate::Ry { qubit, param_index }
            | Gate::Rz { qubit, param_index } => {
                let [g00, g01, g10, g11] = rotation_matrix(gate, params.values()[*param_index]);
                let mask = qubit_mask(*qubit, nq);
                // Left-multiply: rows r0 (bit clear) pair with r1 = r0|mask.
                for r0 in 0..d {
                    if r0 & mask != 0 {
                        continue;
                    }
                    let r1 = r0 | mask;
                    for col in 0..d {
                        let a = u[(r0, col)];
                        let b = u[(r1, col)];
                        u[(r0, col)] = g00 * a + g01 * b;
                        u[(r1, col)] = g10 * a + g11 * b;
                    }
                }
            }
            Gate::Cnot { control, target } => {
                let cmask = qubit_mask(*control, nq);
                let tmask = qubit_mask(*target, nq);
                for r in 0..d {
                    if r & cmask != 0 && r & tmask == 0 {
                        let r2 = r | tmask;
                        for col in 0..d {
                            let tmp = u[(r, col)];
                            u[(r, col)] = u[(r2, col)];
                            u[(r2, col)] = tmp;
                        }
                    }
                }
            }
        }
    }
    Ok(u)
}

/// Computational-basis outcome distribution of `U†(θ) ρ U(θ)`: entry `i` is
/// the `i`-th diagonal element. Entries may undershoot zero by rounding no
/// further than `1e-12` (clamped), and the total may drift from 1 by at
/// most `1e-9` (renormalized); anything worse is a numerical failure.
pub fn outcome_distribution(
    state: &DensityOperator,
    layout: &CircuitLayout,
    params: &CircuitParams,
) -> Result<Vec<f64>> {
    if state.dim() != layout.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state dimension {} does not match circuit dimension {}",
            state.dim(),
            layout.dim()
        )));
    }
    let u = build_unitary(layout, params)?;
    distribution_from_unitary(state, &u)
}

/// Diagonal of `U† ρ U` with clamping and renormalization.
pub(crate) fn distribution_from_unitary(
    state: &DensityOperator,
    u: &ComplexMatrix,
) -> Result<Vec<f64>> {
    let d = state.dim();
    let m = state.matrix().matmul(u);
    let mut probs = Vec::with_capacity(d);
    for i in 0..d {
        // (U†ρU)_{ii} = Σ_k conj(U[k][i]) (ρU)[k][i]
        let mut p = Complex64::new(0.0, 0.0);
        for k in 0..d {
            p += u[(k, i)].conj() * m[(k, i)];
        }
        probs.push(p.re);
    }

    let mut sum = 0.0;
    for p in probs.iter_mut() {
        if *p < 0.0 {
            if *p < -PROBABILITY_CLAMP {
                return Err(Error::NumericalFailure(format!(
                    "outcome probability {:.3e} below clamp tolerance",
                    *p
                )));
            }
            *p = 0.0;
        }
        sum += *p;
    }
    if (sum - 1.0).abs() > DISTRIBUTION_DRIFT_TOL {
        return Err(Error::NumericalFailure(format!(
            "outcome distribution sums to {sum}, drift exceeds tolerance"
        )));
    }
    for p in probs.iter_mut() {
        *p /= sum;
    }
    Ok(probs)
}

/// `n` i.i.d. computational-basis samples via inverse CDF over the exact
/// outcome distribution. Deterministic under a fixed RNG stream.
pub fn sample_outcomes(
    state: &DensityOperator,
    layout: &CircuitLayout,
    params: &CircuitParams,
    n: usize,
    rng: &mut impl rand::Rng,
) -> Result<Vec<usize>> {
    let probs = outcome_distribution(state, layout, params)?;
    Ok(sample_from_distribution(&probs, n, rng))
}

/// Inverse-CDF sampling from an explicit distribution.
pub fn sample_from_distribution(probs: &[f64], n: usize, rng: &mut impl rand::Rng) -> Vec<usize> {
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for &p in probs {
        acc += p;
        cdf.push(acc);
    }
    let last = probs.len() - 1;
    (0..n)
        .map(|_| {
            let u: f64 = rng.gen();
            cdf.iter().position(|&c| u < c).unwrap_or(last)
        })
        .collect()
}
