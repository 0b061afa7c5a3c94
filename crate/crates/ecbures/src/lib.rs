//! Energy-constrained distance measures between finite-dimensional quantum operations.
//!
//! The crate computes the Uhlmann fidelity and Bures distance of positive
//! operators, the operator E-norm induced by a Hamiltonian with an energy
//! bound, and the energy-constrained Bures distance between quantum
//! operations. Its centerpiece is a saddle-point solver that certifies, with
//! matching upper and lower bounds, the equality between the
//! energy-constrained Bures distance of two operations and the E-norm
//! distance from a Stinespring operator of one to the set of Stinespring
//! operators of the other with the same environment.
//!
//! Modules:
//!
//! - [`linops`]: dense complex linear algebra (Hermitian eigendecomposition,
//!   PSD square roots, polar decomposition, partial traces).
//! - [`quantum`]: quantum operations as Kraus families, Stinespring
//!   dilations, complementary operations, smoothing maps.
//! - [`fidelity`]: fidelity, Bures distance, purification alignment.
//! - [`enorm`]: the operator E-norm and the energy-constrained linear
//!   optimizer behind it.
//! - [`ksw`]: the minimax solver producing [`ksw::SaddleCertificate`]s.
//! - [`harness`]: JSON schema, instance generators, the verification suite.
//!
//! Batch workloads (verification trials, multi-restart ascents) run on a
//! rayon thread pool when the default `parallel` feature is enabled and fall
//! back to sequential execution otherwise; results are bit-identical in both
//! modes because every trial draws from its own seeded substream.

use thiserror::Error;

pub mod enorm;
pub mod exec;
pub mod fidelity;
pub mod harness;
pub mod ksw;
pub mod linops;
pub mod quantum;
pub mod tol;

/// Errors surfaced by the library.
///
/// `InvalidInput` covers dimension mismatches and violated preconditions;
/// `NumericalFailure` covers breakdowns of the numerical procedures
/// themselves (bracket failures, duality gaps beyond tolerance).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub use enorm::{max_linear_over_energy_ball, ConstrainedOptimum, EnergyBound, Hamiltonian};
pub use fidelity::{bures_distance, fidelity};
pub use ksw::{solve_with_continuation, KswProblem, SaddleCertificate};
pub use linops::{CMat, CVec, HermitianOperator, PositiveOperator};
pub use quantum::{QuantumOperation, SmoothingParams, StinespringOperator};
