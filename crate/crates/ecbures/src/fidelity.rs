//! Fidelity, Bures distance, and purification alignment for subnormalized
//! positive operators.
//!
//! F(ρ,σ) = [Tr√(√σ ρ √σ)]² and β(ρ,σ) = √(‖ρ‖₁ + ‖σ‖₁ − 2√F). The
//! alignment routine realizes the Uhlmann maximum
//! F = max_{‖U‖≤1} |⟨ψ|I⊗U|φ⟩|² through the polar decomposition of the
//! overlap operator K = Tr_A|φ⟩⟨ψ| on the aligned factor.

use num_complex::Complex64;

use crate::linops::{
    cr, eigh, kron, partial_trace_mat, polar, CMat, CVec, Factor, HermitianOperator,
    PositiveOperator,
};
use crate::quantum::{purify, QuantumOperation};
use crate::{Error, Result};

/// Uhlmann fidelity [Tr√(√σ ρ √σ)]², symmetric in its arguments.
///
/// Computed through one Hermitian eigendecomposition of √σ ρ √σ with PSD
/// clipping, so its rounding behavior matches the rest of the crate.
pub fn fidelity(rho: &PositiveOperator, sigma: &PositiveOperator) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::InvalidInput(format!(
            "fidelity: dimensions {} vs {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    let s = crate::linops::psd_sqrt(sigma)?;
    let inner = s.matrix() * rho.matrix() * s.matrix();
    let herm = HermitianOperator::new(crate::linops::herm_part(&inner))?;
    let eigenvalues = eigh(&herm).eigenvalues;
    // Rounding turns exact zeros of the rank-deficient product into ±ε·λmax;
    // their square roots would pollute the trace sum at the √ε scale.
    let noise = crate::tol::SPECTRAL_NOISE_REL
        * eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let root_sum: f64 = eigenvalues
        .iter()
        .map(|&l| if l > noise { l.sqrt() } else { 0.0 })
        .sum();
    Ok(root_sum * root_sum)
}

/// Bures distance β(ρ,σ) = √(‖ρ‖₁ + ‖σ‖₁ − 2√F(ρ,σ)) on positive operators.
///
/// The argument of the outer square root is clipped to zero down to −1e-9;
/// anything lower is reported as a numerical failure.
pub fn bures_distance(rho: &PositiveOperator, sigma: &PositiveOperator) -> Result<f64> {
    let f = fidelity(rho, sigma)?;
    let arg = rho.trace() + sigma.trace() - 2.0 * f.max(0.0).sqrt();
    if arg < -1e-9 {
        return Err(Error::NumericalFailure(format!(
            "bures_distance: squared distance {arg:.3e} below clipping threshold"
        )));
    }
    Ok(arg.max(0.0).sqrt())
}

/// Result of aligning one purification against another on the shared
/// second factor.
#[derive(Debug, Clone)]
pub struct AlignmentResult {
    /// Maximizing partial isometry on H_B (adjoint polar factor of K).
    pub u0: CMat,
    /// ⟨ψ|I⊗U₀|φ⟩, real and nonnegative by the phase convention.
    pub overlap: Complex64,
    /// |overlap|², which equals the fidelity of the reduced operators.
    pub fidelity_value: f64,
    /// Whether (I⊗U₀†U₀)|φ⟩ = |φ⟩ within 1e-8.
    pub satisfies_u_cond: bool,
}

/// Aligns two vectors on H_A⊗H_B: finds U₀ in the unit ball of B(H_B)
/// maximizing |⟨ψ|I_A⊗U|φ⟩|.
///
/// The maximum equals √F(Tr_B|φ⟩⟨φ|, Tr_B|ψ⟩⟨ψ|) and is attained at the
/// adjoint of the partial-isometry polar factor of K = Tr_A|φ⟩⟨ψ|, since
/// max_{‖U‖≤1} Re Tr(UK) = ‖K‖₁. U₀ is returned as a partial isometry
/// restricted to the support, never artificially completed to a unitary.
pub fn align_purifications(
    phi: &CVec,
    psi: &CVec,
    d_a: usize,
    d_b: usize,
) -> Result<AlignmentResult> {
    let d = d_a * d_b;
    if phi.len() != d || psi.len() != d {
        return Err(Error::InvalidInput(format!(
            "align_purifications: vector lengths {} and {} do not match {d_a}·{d_b}",
            phi.len(),
            psi.len()
        )));
    }
    let outer = phi * psi.adjoint();
    let k = partial_trace_mat(&outer, d_a, d_b, Factor::First)?;
    let (w, _) = polar(&k);
    let u0 = w.adjoint();
    let overlap = (&u0 * &k).trace();
    let fidelity_value = overlap.norm_sqr();

    let gram = u0.adjoint() * &u0;
    let fixed = apply_second_factor(&gram, phi, d_a, d_b);
    let residual = (&fixed - phi).norm();
    let satisfies_u_cond = residual <= 1e-8 * phi.norm().max(1.0);

    Ok(AlignmentResult {
        u0,
        overlap,
        fidelity_value,
        satisfies_u_cond,
    })
}

/// (I_A ⊗ M)|v⟩ without forming the Kronecker product.
fn apply_second_factor(m: &CMat, v: &CVec, d_a: usize, d_b: usize) -> CVec {
    let mut out = CVec::zeros(d_a * d_b);
    for a in 0..d_a {
        for i in 0..d_b {
            let mut acc = cr(0.0);
            for j in 0..d_b {
                acc += m[(i, j)] * v[a * d_b + j];
            }
            out[a * d_b + i] = acc;
        }
    }
    out
}

/// F(Φ⊗id(ω), Ψ⊗id(ω)) for a fixed state ω on H_A⊗H_R: an upper bound on
/// the operational fidelity, hence a Bures lower-bound generator.
pub fn operation_fidelity_lower_witness(
    phi: &QuantumOperation,
    psi: &QuantumOperation,
    omega: &PositiveOperator,
) -> Result<f64> {
    if phi.d_in() != psi.d_in() || phi.d_out() != psi.d_out() {
        return Err(Error::InvalidInput(
            "operations must share input and output spaces".into(),
        ));
    }
    if omega.dim() % phi.d_in() != 0 {
        return Err(Error::InvalidInput(format!(
            "state dimension {} is not a multiple of d_in {}",
            omega.dim(),
            phi.d_in()
        )));
    }
    let d_r = omega.dim() / phi.d_in();
    let out_phi = phi.apply_extended(omega, d_r)?;
    let out_psi = psi.apply_extended(omega, d_r)?;
    fidelity(&out_phi, &out_psi)
}

/// Bures distance between the two extended outputs at the canonical
/// purification of a feasible input state (used by the solver's lower
/// bound and exposed for the CLI).
pub fn bures_between_outputs_at(
    phi: &QuantumOperation,
    psi: &QuantumOperation,
    rho: &PositiveOperator,
) -> Result<f64> {
    let purif = purify(rho)?;
    let omega = PositiveOperator::from_psd_unchecked(&purif.vector * purif.vector.adjoint());
    let out_phi = phi.apply_extended(&omega, purif.d_reference)?;
    let out_psi = psi.apply_extended(&omega, purif.d_reference)?;
    bures_distance(&out_phi, &out_psi)
}

/// Purification of ρ followed by a random isometry rotation on the
/// reference side would also purify ρ; tests use this to exercise the
/// Uhlmann freedom. Public because the harness samples purifications too.
pub fn rotate_reference(purified: &CVec, d_a: usize, d_b: usize, u_ref: &CMat) -> CVec {
    debug_assert_eq!(purified.len(), d_a * d_b);
    let big = kron(&CMat::identity(d_a, d_a), u_ref);
    &big * purified
}
