//! Label propagation and the graph label trick.
//!
//! The crate covers the propagation operators used to smooth labels over a
//! graph, the self-excluded predictor that blocks each training node's own
//! label, the exact deterministic form of the stochastic label-trick MSE
//! objective, and trainable extensions (trainable label propagation, linear
//! feature+label models, trainable Correct & Smooth).
//!
//! Dense matrices are [`nalgebra::DMatrix<f64>`], aliased as [`Mat`]; graph
//! operators are stored as row-compressed [`graph::SparseMatrix`] values.

pub mod data;
pub mod error;
pub mod graph;
pub mod objectives;
pub mod predictors;
pub mod propagation;
pub mod rng;
pub mod splits;
pub mod training;
pub mod verify;

pub use error::{Error, Result};
pub use graph::{build_laplacian, build_normalized_adjacency, spmm, Graph, SparseMatrix};
pub use predictors::{GammaMode, ModelKind, ModelWeights};
pub use propagation::{gamma_matrix, OperatorMode, OperatorSpec, PropagationOperator};
pub use splits::{LabelKind, LabelMatrix, SplitMask};

pub type Mat = nalgebra::DMatrix<f64>;

/// Squared Frobenius norm.
pub fn frob_sq(m: &Mat) -> f64 {
    m.iter().map(|v| v * v).sum()
}
