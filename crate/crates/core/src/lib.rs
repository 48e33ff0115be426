//! Recovery of symmetric graph matrices from linear measurements `A = B·Y + Z`.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph_model`]: undirected graphs, graph matrices, admittance construction.
//! - [`ensembles`]: random graph samplers and `(μ, K, ρ)` sparsity profiles.
//! - [`measurement`]: generator/measurement synthesis and perturbation extraction.
//! - [`sparse_solver`]: the ℓ1 engine, its dual certificate, and brute-force
//!   matrix diagnostics (spark, restricted isometry constant, ξ).
//! - [`recovery`]: the three-stage scheme, the iterative heuristic and the
//!   basis-pursuit baselines.
//! - [`bounds`]: closed-form sample-complexity bounds.
//! - [`harness`]: Monte-Carlo trials, sweeps, metrics and file formats.
//!
//! Indices are 0-based everywhere in the API; file formats are 1-based.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod ensembles;
pub mod error;
pub mod graph_model;
pub mod harness;
pub mod measurement;
pub mod recovery;
pub mod rng;
pub mod sparse_solver;

pub use error::{Error, Result};
pub use graph_model::{DegreeProfile, Field, Graph, GraphMatrix};
pub use num_complex::Complex64;

/// Dense complex matrix used for all measurement and graph matrices.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
/// Dense complex vector.
pub type CVector = nalgebra::DVector<Complex64>;
