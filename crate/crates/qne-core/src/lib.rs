//! Variational estimation of quantum entropies and measured relative
//! entropies.
//!
//! The estimators in this crate parameterize Hermitian operators with a
//! layered quantum circuit (eigenvectors) and a small neural network or an
//! explicit vector (eigenvalues), sample measurement outcomes from a dense
//! density-operator simulator, and optimize a variational objective whose
//! optimum is the quantity of interest. Closed-form ground truths for
//! validation live in [`oracle`].

pub mod circuit;
pub mod constants;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod linalg;
pub mod neural;
pub mod oracle;
pub mod rng;
pub mod state;

pub use circuit::{CircuitLayout, CircuitParams, Gate};
pub use error::{Error, Result};
pub use estimators::{
    EigenvalueModel, EstimateReport, HermitianAnsatz, Objective, OptimizerKind, Quantity,
    SampleBatch, TrainingConfig, TrainingTrace,
};
pub use linalg::ComplexMatrix;
pub use state::{DensityOperator, PureState};

/// Complex scalar used throughout.
pub type Complex = num_complex::Complex64;
