//! The eigenvalue network: a one-hidden-layer perceptron with sigmoid
//! activations and a linear output, mapping basis indices to real values.
//!
//! Indices are fed to the network as their big-endian binary digits in
//! `{0.0, 1.0}`, so a two-qubit network has input width 2 and a six-qubit
//! network width 6. No output nonlinearity is applied: eigenvalue proxies
//! must be free to leave `[0, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters (or a same-shaped gradient) of the eigenvalue network.
///
/// Total parameter count is `hidden_dim * (input_dim + 2) + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub input_dim: usize,
    pub hidden_dim: usize,
    /// `hidden_dim x input_dim`, row-major.
    pub weights_in: Vec<Vec<f64>>,
    pub bias_in: Vec<f64>,
    /// `1 x hidden_dim`.
    pub weights_out: Vec<f64>,
    pub bias_out: f64,
}

impl MlpParams {
    /// All-zero parameters of the given shape.
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_dim,
            weights_in: vec![vec![0.0; input_dim]; hidden_dim],
            bias_in: vec![0.0; hidden_dim],
            weights_out: vec![0.0; hidden_dim],
            bias_out: 0.0,
        }
    }

    /// Glorot-style initialization: weights uniform in `[-a, a]` with
    /// `a = sqrt(6 / (fan_in + fan_out))`, biases zero.
    pub fn glorot(input_dim: usize, hidden_dim: usize, rng: &mut impl rand::Rng) -> Self {
        let mut p = Self::zeros(input_dim, hidden_dim);
        let a_in = (6.0 / (input_dim + hidden_dim) as f64).sqrt();
        for row in &mut p.weights_in {
            for w in row {
                *w = rng.gen_range(-a_in..a_in);
            }
        }
        let a_out = (6.0 / (hidden_dim + 1) as f64).sqrt();
        for w in &mut p.weights_out {
            *w = rng.gen_range(-a_out..a_out);
        }
        p
    }

    /// Total number of scalar parameters.
    pub fn num_params(&self) -> usize {
        self.hidden_dim * (self.input_dim + 2) + 1
    }

    /// In-place `self += coeff * other` over every parameter. Shapes must
    /// match.
    pub fn axpy(&mut self, coeff: f64, other: &Self) {
        assert_eq!(self.input_dim, other.input_dim);
        assert_eq!(self.hidden_dim, other.hidden_dim);
        for (r, ro) in self.weights_in.iter_mut().zip(&other.weights_in) {
            for (w, wo) in r.iter_mut().zip(ro) {
                *w += coeff * wo;
            }
        }
        for (b, bo) in self.bias_in.iter_mut().zip(&other.bias_in) {
            *b += coeff * bo;
        }
        for (w, wo) in self.weights_out.iter_mut().zip(&other.weights_out) {
            *w += coeff * wo;
        }
        self.bias_out += coeff * other.bias_out;
    }

    /// Flatten to a single vector (used by finite-difference checks and
    /// Adam state).
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.num_params());
        for row in &self.weights_in {
            v.extend_from_slice(row);
        }
        v.extend_from_slice(&self.bias_in);
        v.extend_from_slice(&self.weights_out);
        v.push(self.bias_out);
        v
    }

    /// Inverse of [`MlpParams::flatten`].
    pub fn from_flat(input_dim: usize, hidden_dim: usize, flat: &[f64]) -> Self {
        let mut p = Self::zeros(input_dim, hidden_dim);
        assert_eq!(flat.len(), p.num_params());
        let mut it = flat.iter().copied();
        for row in &mut p.weights_in {
            for w in row {
                *w = it.next().unwrap();
            }
        }
        for b in &mut p.bias_in {
            *b = it.next().unwrap();
        }
        for w in &mut p.weights_out {
            *w = it.next().unwrap();
        }
        p.bias_out = it.next().unwrap();
        p
    }

    /// Checkpoint JSON with explicit array shapes.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network parameters serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: MlpParams = serde_json::from_str(text)?;
        if p.weights_in.len() != p.hidden_dim
            || p.weights_in.iter().any(|r| r.len() != p.input_dim)
            || p.bias_in.len() != p.hidden_dim
            || p.weights_out.len() != p.hidden_dim
        {
            return Err(Error::Serialization(
                "network checkpoint shape fields do not match array shapes".into(),
            ));
        }
        if p.flatten().iter().any(|v| !v.is_finite()) {
            return Err(Error::Serialization(
                "network checkpoint contains non-finite values".into(),
            ));
        }
        Ok(p)
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Big-endian binary digits of `i` as `{0.0, 1.0}` values of length
/// `num_qubits`.
pub fn encode_index(i: usize, num_qubits: usize) -> Result<Vec<f64>> {
    if i >= (1 << num_qubits) {
        return Err(Error::IndexOutOfRange {
            index: i,
            num_qubits,
        });
    }
    Ok((0..num_qubits)
        .map(|bit| ((i >> (num_qubits - 1 - bit)) & 1) as f64)
        .collect())
}

/// Network output for basis index `i`:
/// `bias_out + weights_out · sigmoid(weights_in · bits(i) + bias_in)`.
pub fn forward(params: &MlpParams, i: usize) -> Result<f64> {
    let x = encode_index(i, params.input_dim)?;
    let mut out = params.bias_out;
    for h in 0..params.hidden_dim {
        let mut z = params.bias_in[h];
        for (w, xi) in params.weights_in[h].iter().zip(&x) {
            z += w * xi;
        }
        out += params.weights_out[h] * sigmoid(z);
    }
    Ok(out)
}

/// Exact gradient of `Σ_ℓ upstream_ℓ · f(i_ℓ)` with respect to every
/// parameter, accumulated over the list.
pub fn backward(params: &MlpParams, per_index_grads: &[(usize, f64)]) -> Result<MlpParams> {
    let mut grad = MlpParams::zeros(params.input_dim, params.hidden_dim);
    for &(i, upstream) in per_index_grads {
        let x = encode_index(i, params.input_dim)?;
        for h in 0..params.hidden_dim {
            let mut z = params.bias_in[h];
            for (w, xi) in params.weights_in[h].iter().zip(&x) {
                z += w * xi;
            }
            let s = sigmoid(z);
            grad.weights_out[h] += upstream * s;
            let dz = upstream * params.weights_out[h] * s * (1.0 - s);
            grad.bias_in[h] += dz;
            for (gw, xi) in grad.weights_in[h].iter_mut().zip(&x) {
                *gw += dz * xi;
            }
        }
        grad.bias_out += upstream;
    }
    Ok(grad)
}
