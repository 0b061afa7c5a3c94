//! Numerical tolerances used across the crate.
//!
//! All thresholds are relative to the natural scale of the quantity they
//! guard unless stated otherwise. They separate double-precision rounding
//! from genuine violations at the dimensions this crate targets (d ≲ 20).

/// Relative hermiticity tolerance: ‖M − M†‖_max ≤ HERMITICITY_REL · ‖M‖_max.
pub const HERMITICITY_REL: f64 = 1e-12;

/// Eigenvalues of a nominally PSD matrix in [−PSD_CLIP_REL·‖M‖, 0) are
/// clipped to zero; anything below is an error.
pub const PSD_CLIP_REL: f64 = 1e-10;

/// Relative agreement required between a stored trace and the matrix trace.
pub const TRACE_REL: f64 = 1e-12;

/// Default relative cutoff separating numerical noise from genuine support.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Eigenvalues of PSD products below this fraction of λ_max are rounding
/// noise of exact zeros; square-root routes clip them to keep √ε artifacts
/// out of trace sums.
pub const SPECTRAL_NOISE_REL: f64 = 1e-13;

/// Slack allowed on trace non-increase of a quantum operation.
pub const TRACE_NONINCREASING: f64 = 1e-10;

/// Contraction slack for Stinespring operators: ‖V‖ ≤ 1 + this.
pub const CONTRACTION_SLACK: f64 = 1e-10;

/// Absolute slack on the energy constraint Tr Hρ ≤ E.
pub const ENERGY_SLACK: f64 = 1e-9;

/// Duality-gap guard for the constrained linear optimizer, relative to
/// 1 + |value|. Ten times looser than the 1e-9 the tests assert, so a
/// violation here signals a real breakdown rather than rounding.
pub const DUALITY_GAP_GUARD: f64 = 1e-8;

/// Residual below which an operator counts as a member of the Stinespring
/// symmetry set W_Ψ (idempotency of U†U and (I⊗U†U)V_Ψ = V_Ψ).
pub const MEMBERSHIP_TOL: f64 = 1e-7;
