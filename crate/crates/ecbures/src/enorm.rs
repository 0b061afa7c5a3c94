//! The operator E-norm and the constrained-state linear optimizer behind it.
//!
//! ‖X‖_E is the largest ‖Xφ‖ over unit vectors with ⟨φ|H|φ⟩ ≤ E,
//! equivalently √max{Tr X†Xρ} over energy-constrained states. The
//! maximization of Tr Mρ over {ρ ⪰ 0, Trρ = 1, Tr Hρ ≤ E} is solved through
//! its dual g(λ) = λE + λ_max(M − λH), convex in λ ≥ 0, with the primal
//! recovered as a two-eigenvector mixture that makes the energy constraint
//! exactly active (the two-level construction). The returned value is the
//! best dual value encountered, i.e. a certified upper bound that matches
//! the primal witness to the duality-gap tolerance.

use crate::linops::{cr, eigh, CMat, CVec, HermitianOperator, PositiveOperator};
use crate::tol;
use crate::{Error, Result};

/// A positive operator given by its eigenvalues (ascending) and eigenbasis.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    eigenvalues: Vec<f64>,
    basis: CMat,
    matrix: CMat,
}

impl Hamiltonian {
    /// Builds from an eigensystem; pairs are sorted by ascending energy and
    /// the basis must be orthonormal within 1e-12.
    pub fn new(eigenvalues: Vec<f64>, basis: CMat) -> Result<Self> {
        let dim = eigenvalues.len();
        if dim == 0 {
            return Err(Error::InvalidInput("empty Hamiltonian spectrum".into()));
        }
        if basis.nrows() != dim || basis.ncols() != dim {
            return Err(Error::InvalidInput(format!(
                "eigenbasis is {}x{}, expected {dim}x{dim}",
                basis.nrows(),
                basis.ncols()
            )));
        }
        if eigenvalues.iter().any(|e| !e.is_finite() || *e < 0.0) {
            return Err(Error::InvalidInput(
                "Hamiltonian eigenvalues must be finite and nonnegative".into(),
            ));
        }
        let gram = basis.adjoint() * &basis;
        if crate::linops::max_abs(&(&gram - CMat::identity(dim, dim))) > 1e-12 {
            return Err(Error::InvalidInput(
                "Hamiltonian eigenbasis is not orthonormal".into(),
            ));
        }
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eigenvalues[a].partial_cmp(&eigenvalues[b]).unwrap());
        let sorted: Vec<f64> = order.iter().map(|&i| eigenvalues[i]).collect();
        let mut sorted_basis = CMat::zeros(dim, dim);
        for (slot, &i) in order.iter().enumerate() {
            sorted_basis.set_column(slot, &basis.column(i));
        }
        let mut scaled = sorted_basis.clone();
        for (j, &e) in sorted.iter().enumerate() {
            scaled.column_mut(j).scale_mut(e);
        }
        let matrix = &scaled * sorted_basis.adjoint();
        Ok(Self {
            eigenvalues: sorted,
            basis: sorted_basis,
            matrix: crate::linops::herm_part(&matrix),
        })
    }

    /// Diagonal Hamiltonian in the computational basis.
    pub fn from_diagonal(eigenvalues: Vec<f64>) -> Result<Self> {
        let dim = eigenvalues.len();
        Self::new(eigenvalues, CMat::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Ground energy E₀.
    pub fn e0(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn e_max(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn basis(&self) -> &CMat {
        &self.basis
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    /// Ground eigenvector.
    pub fn ground_vector(&self) -> CVec {
        self.basis.column(0).clone_owned()
    }

    /// ⟨φ|H|φ⟩ for a (not necessarily normalized) vector.
    pub fn energy_of_vector(&self, phi: &CVec) -> f64 {
        (phi.adjoint() * &self.matrix * phi)[(0, 0)].re
    }

    /// Tr Hρ on a raw matrix.
    pub fn energy_of(&self, rho: &CMat) -> f64 {
        (&self.matrix * rho).trace().re
    }
}

/// Mean-energy bound E; only meaningful above the ground energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBound {
    pub value: f64,
}

impl EnergyBound {
    pub fn new(value: f64) -> Self {
        Self { value }
    }

    /// The Slater condition E > E₀, required by every constrained solve.
    pub fn check_against(&self, h: &Hamiltonian) -> Result<()> {
        if !self.value.is_finite() || self.value <= h.e0() {
            return Err(Error::InvalidInput(format!(
                "energy bound E = {} must exceed the ground energy E0 = {}",
                self.value,
                h.e0()
            )));
        }
        Ok(())
    }
}

/// Output of [`max_linear_over_energy_ball`].
#[derive(Debug, Clone)]
pub struct ConstrainedOptimum {
    /// Best dual value: a certified upper bound on the maximum, within the
    /// duality-gap tolerance of Tr Mρ* at the witness.
    pub value: f64,
    /// Optimal Lagrange multiplier for the energy constraint.
    pub lambda_star: f64,
    /// Primal witness state.
    pub rho_star: PositiveOperator,
    /// Whether the energy constraint is active at the optimum.
    pub active: bool,
    /// Pure witness, filled in by [`pure_witness_refine`].
    pub pure_witness: Option<CVec>,
}

/// Top eigenspace of `A` (within a tight degeneracy window) restricted to
/// which the energy is minimized: returns (vector, its energy, λ_max(A)).
fn min_energy_top_eigenvector(a: &CMat, h: &Hamiltonian) -> (CVec, f64, f64) {
    let herm = HermitianOperator::new(crate::linops::herm_part(a)).expect("finite Hermitian part");
    let decomp = eigh(&herm);
    let lambda_max = decomp.eigenvalues[0];
    let spread = lambda_max - decomp.eigenvalues.last().copied().unwrap_or(lambda_max);
    let window = 1e-12 * lambda_max.abs().max(spread).max(1.0);
    let k = decomp
        .eigenvalues
        .iter()
        .take_while(|&&l| l >= lambda_max - window)
        .count()
        .max(1);
    if k == 1 {
        let v = decomp.eigenvectors.column(0).clone_owned();
        let e = h.energy_of_vector(&v);
        return (v, e, lambda_max);
    }
    // Minimize ⟨H⟩ inside the degenerate top eigenspace: ground vector of
    // the restriction Q†HQ.
    let q = decomp.eigenvectors.columns(0, k).clone_owned();
    let restricted = q.adjoint() * h.matrix() * &q;
    let rherm = HermitianOperator::new(crate::linops::herm_part(&restricted)).unwrap();
    let rdec = eigh(&rherm);
    let u = rdec.eigenvectors.column(k - 1); // descending order → last is ground
    let v = &q * u;
    let e = h.energy_of_vector(&v.clone_owned());
    (v, e, lambda_max)
}

/// max{Tr Mρ : ρ ⪰ 0, Trρ = 1, Tr Hρ ≤ E} via the dual
/// g(λ) = λE + λ_max(M − λH) bisected on the feasibility of the
/// minimum-energy top eigenvector.
pub fn max_linear_over_energy_ball(
    m: &HermitianOperator,
    h: &Hamiltonian,
    e: EnergyBound,
) -> Result<ConstrainedOptimum> {
    if m.dim() != h.dim() {
        return Err(Error::InvalidInput(format!(
            "objective dim {} vs Hamiltonian dim {}",
            m.dim(),
            h.dim()
        )));
    }
    e.check_against(h)?;
    let e_val = e.value;

    let spec_m = eigh(m).eigenvalues;
    let (lam_max_m, lam_min_m) = (spec_m[0], *spec_m.last().unwrap());

    // λ = 0: if the least-energetic top eigenvector of M is feasible the
    // constraint is inactive.
    let (v0, h0, _) = min_energy_top_eigenvector(m.matrix(), h);
    if h0 <= e_val {
        let rho = PositiveOperator::from_psd_unchecked(&v0 * v0.adjoint());
        return Ok(ConstrainedOptimum {
            value: lam_max_m,
            lambda_star: 0.0,
            rho_star: rho,
            active: false,
            pure_witness: None,
        });
    }

    // Beyond λ_up the dual is increasing, so the bracket is guaranteed.
    let lambda_up = (lam_max_m - lam_min_m) / (e_val - h.e0()) + 1.0;
    let eval_at = |lambda: f64| -> (CVec, f64, f64) {
        let a = m.matrix() - h.matrix() * cr(lambda);
        let (v, hv, top) = min_energy_top_eigenvector(&a, h);
        (v, hv, lambda * e_val + top)
    };

    let (mut v_infeas, mut h_infeas) = (v0, h0);
    let (v_up, h_up, g_up) = eval_at(lambda_up);
    if h_up > e_val {
        return Err(Error::NumericalFailure(format!(
            "dual bracket failure: energy {h_up} still above E = {e_val} at λ_up = {lambda_up}"
        )));
    }
    let mut best_dual = (lam_max_m).min(g_up); // includes g(0) = λ_max(M)
    let (mut v_feas, mut h_feas) = (v_up, h_up);
    let (mut lo, mut hi) = (0.0_f64, lambda_up);
    let width_target = 1e-13 * lambda_up.max(1.0);
    while hi - lo > width_target {
        let mid = 0.5 * (lo + hi);
        let (v, hv, g) = eval_at(mid);
        best_dual = best_dual.min(g);
        if hv > e_val {
            lo = mid;
            v_infeas = v;
            h_infeas = hv;
        } else {
            hi = mid;
            v_feas = v;
            h_feas = hv;
        }
    }
    let lambda_star = hi;

    // Two-level mixture meeting the constraint exactly.
    let (rho_mat, _weight_feas) = if h_infeas - h_feas > 1e-14 * h.e_max().max(1.0) {
        let a = ((h_infeas - e_val) / (h_infeas - h_feas)).clamp(0.0, 1.0);
        (
            (&v_feas * v_feas.adjoint()) * cr(a) + (&v_infeas * v_infeas.adjoint()) * cr(1.0 - a),
            a,
        )
    } else {
        (&v_feas * v_feas.adjoint(), 1.0)
    };
    let rho_star = PositiveOperator::from_psd_unchecked(rho_mat);
    let primal = (m.matrix() * rho_star.matrix()).trace().re;
    let gap = best_dual - primal;
    if gap > tol::DUALITY_GAP_GUARD * (1.0 + best_dual.abs()) {
        return Err(Error::NumericalFailure(format!(
            "duality gap {gap:.3e} exceeds guard at λ* = {lambda_star}"
        )));
    }

    Ok(ConstrainedOptimum {
        value: best_dual,
        lambda_star,
        rho_star,
        active: true,
        pure_witness: None,
    })
}

/// Frobenius projection of a Hermitian operator onto the energy cap
/// {ρ ⪰ 0, Trρ = 1, Tr Hρ ≤ E}.
///
/// For a fixed energy multiplier ν the problem reduces to projecting the
/// spectrum of X − νH onto the unit simplex (the feasible set without the
/// energy constraint is unitarily invariant); ν is then driven by bisection
/// until complementary slackness holds. Tr Hρ(ν) is nonincreasing in ν.
pub fn project_to_energy_cap(
    x: &CMat,
    h: &Hamiltonian,
    e: EnergyBound,
) -> Result<PositiveOperator> {
    if x.nrows() != h.dim() || x.ncols() != h.dim() {
        return Err(Error::InvalidInput("projection: dimension mismatch".into()));
    }
    e.check_against(h)?;
    let sym = crate::linops::herm_part(x);
    let attempt = |nu: f64| -> Result<(CMat, f64)> {
        let shifted = &sym - h.matrix() * cr(nu);
        let herm = HermitianOperator::new(crate::linops::herm_part(&shifted))?;
        let dec = eigh(&herm);
        let b = &dec.eigenvalues; // descending
        let mut mu = b[0] - 1.0;
        let mut prefix = 0.0;
        for (k, &bk) in b.iter().enumerate() {
            prefix += bk;
            let cand = (prefix - 1.0) / (k as f64 + 1.0);
            if bk - cand > 0.0 {
                mu = cand;
            }
        }
        let lambdas: Vec<f64> = b.iter().map(|&bi| (bi - mu).max(0.0)).collect();
        let rho = dec.reconstruct_with(&lambdas);
        let trh = h.energy_of(&rho);
        Ok((rho, trh))
    };

    let (rho0, th0) = attempt(0.0)?;
    if th0 <= e.value {
        return Ok(PositiveOperator::from_psd_unchecked(rho0));
    }
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    let mut feasible: Option<CMat> = None;
    for _ in 0..60 {
        let (rho, trh) = attempt(hi)?;
        if trh <= e.value {
            feasible = Some(rho);
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    let mut best = feasible.ok_or_else(|| {
        Error::NumericalFailure("energy-cap projection: multiplier bracket failure".into())
    })?;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let (rho, trh) = attempt(mid)?;
        if trh <= e.value {
            hi = mid;
            best = rho;
        } else {
            lo = mid;
        }
    }
    Ok(PositiveOperator::from_psd_unchecked(best))
}

/// Entropy-regularized maximizer over the energy cap:
/// argmax { Tr Mρ + τ·S(ρ) : ρ ⪰ 0, Trρ = 1, Tr Hρ ≤ E }.
///
/// The unconstrained-in-energy solution is the Gibbs state
/// exp((M − λH)/τ)/Z with λ ≥ 0 raised until the energy constraint holds;
/// Tr Hρ(λ) is decreasing, so bisection applies. A smooth softening of the
/// exact constrained maximizer used by gradient-based search.
pub fn gibbs_argmax(
    m: &HermitianOperator,
    h: &Hamiltonian,
    e: EnergyBound,
    temperature: f64,
) -> Result<PositiveOperator> {
    if m.dim() != h.dim() {
        return Err(Error::InvalidInput("gibbs_argmax: dimension mismatch".into()));
    }
    e.check_against(h)?;
    if !(temperature > 0.0) {
        return Err(Error::InvalidInput("temperature must be positive".into()));
    }
    let state_at = |lambda: f64| -> (CMat, f64) {
        let shifted = m.matrix() - h.matrix() * cr(lambda);
        let herm = HermitianOperator::new(crate::linops::herm_part(&shifted))
            .expect("Hermitian by construction");
        let dec = eigh(&herm);
        let top = dec.eigenvalues[0];
        let weights: Vec<f64> = dec
            .eigenvalues
            .iter()
            .map(|&a| ((a - top) / temperature).exp())
            .collect();
        let z: f64 = weights.iter().sum();
        let probs: Vec<f64> = weights.iter().map(|w| w / z).collect();
        let rho = dec.reconstruct_with(&probs);
        let trh = h.energy_of(&rho);
        (rho, trh)
    };
    let (rho0, th0) = state_at(0.0);
    if th0 <= e.value {
        return Ok(PositiveOperator::from_psd_unchecked(rho0));
    }
    let spec = eigh(m).eigenvalues;
    let mut lo = 0.0_f64;
    let mut hi = (spec[0] - spec[spec.len() - 1]) / (e.value - h.e0()) + 1.0;
    let (mut best, mut th_hi) = state_at(hi);
    while th_hi > e.value {
        lo = hi;
        hi *= 2.0;
        let (r, t) = state_at(hi);
        best = r;
        th_hi = t;
        if hi > 1e12 {
            return Err(Error::NumericalFailure(
                "gibbs_argmax: multiplier bracket failure".into(),
            ));
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let (r, t) = state_at(mid);
        if t <= e.value {
            hi = mid;
            best = r;
        } else {
            lo = mid;
        }
    }
    Ok(PositiveOperator::from_psd_unchecked(best))
}

/// Operator E-norm ‖X‖_E = √max{Tr X†Xρ : Tr Hρ ≤ E}; never exceeds ‖X‖ and
/// matches it once E ≥ λ_max(H).
pub fn enorm(x: &CMat, h: &Hamiltonian, e: EnergyBound) -> Result<f64> {
    if x.ncols() != h.dim() {
        return Err(Error::InvalidInput(format!(
            "operator has {} columns, Hamiltonian dimension is {}",
            x.ncols(),
            h.dim()
        )));
    }
    let gram = HermitianOperator::new(crate::linops::herm_part(&(x.adjoint() * x)))?;
    let opt = max_linear_over_energy_ball(&gram, h, e)?;
    Ok(opt.value.max(0.0).sqrt())
}

/// Smoothed E-norm via the closed-form identity
/// [‖X‖_E^p]² = (1−p)·‖X‖_E² + p·Tr XσX† (no separate optimization).
pub fn enorm_smoothed(
    x: &CMat,
    h: &Hamiltonian,
    e: EnergyBound,
    sp: &crate::quantum::SmoothingParams,
) -> Result<f64> {
    if sp.dim() != h.dim() {
        return Err(Error::InvalidInput(
            "smoothing reference must live on the input space".into(),
        ));
    }
    let base = enorm(x, h, e)?;
    let sigma_term = (x * sp.sigma().matrix() * x.adjoint()).trace().re;
    Ok(((1.0 - sp.p()) * base * base + sp.p() * sigma_term)
        .max(0.0)
        .sqrt())
}

/// Exactly solves max ξ†M_rξ s.t. ξ†H_rξ ≤ E on the unit sphere of the 2-D
/// section span{φ, u} (u orthonormal to φ). In the H_r eigenbasis the energy
/// has no cross term, so a phase-aligned mixture handles the constraint
/// exactly; the remaining 1-D concave profile is maximized by golden
/// section.
fn ascend_2d_section(
    phi: &CVec,
    u: &CVec,
    m: &CMat,
    h: &Hamiltonian,
    e_val: f64,
) -> Option<(CVec, f64)> {
    let d = phi.len();
    let mut basis = CMat::zeros(d, 2);
    basis.set_column(0, phi);
    basis.set_column(1, u);
    let m_r = basis.adjoint() * m * &basis;
    let h_r = basis.adjoint() * h.matrix() * &basis;
    let h_herm = HermitianOperator::new(crate::linops::herm_part(&h_r)).ok()?;
    let hd = eigh(&h_herm);
    // descending order: index 1 is the low-energy section state
    let (eta_high, eta_low) = (hd.eigenvalues[0], hd.eigenvalues[1]);
    let w_high = hd.eigenvectors.column(0).clone_owned();
    let w_low = hd.eigenvectors.column(1).clone_owned();
    if eta_low > e_val {
        return None;
    }
    let m_ll = (w_low.adjoint() * &m_r * &w_low)[(0, 0)].re;
    let m_hh = (w_high.adjoint() * &m_r * &w_high)[(0, 0)].re;
    let m_lh = (w_low.adjoint() * &m_r * &w_high)[(0, 0)];
    let cross_mag = m_lh.norm();
    let phase = if cross_mag > 0.0 {
        m_lh.conj() / cross_mag
    } else {
        cr(1.0)
    };

    let t_min = if eta_high <= e_val {
        0.0
    } else {
        ((eta_high - e_val) / (eta_high - eta_low)).clamp(0.0, 1.0)
    };
    let value = |t: f64| t * m_ll + (1.0 - t) * m_hh + 2.0 * (t * (1.0 - t)).sqrt() * cross_mag;

    // Golden-section maximum of the concave profile on [t_min, 1].
    let (mut a, mut b) = (t_min, 1.0);
    let inv_phi = 0.5 * (5.0_f64.sqrt() - 1.0);
    let (mut c1, mut c2) = (b - inv_phi * (b - a), a + inv_phi * (b - a));
    let (mut f1, mut f2) = (value(c1), value(c2));
    for _ in 0..80 {
        if f1 < f2 {
            a = c1;
            c1 = c2;
            f1 = f2;
            c2 = a + inv_phi * (b - a);
            f2 = value(c2);
        } else {
            b = c2;
            c2 = c1;
            f2 = f1;
            c1 = b - inv_phi * (b - a);
            f1 = value(c1);
        }
    }
    let t_star = [a, 0.5 * (a + b), b, t_min, 1.0]
        .into_iter()
        .filter(|t| *t >= t_min && *t <= 1.0)
        .max_by(|x, y| value(*x).partial_cmp(&value(*y)).unwrap())?;

    let xi_low = t_star.sqrt();
    let xi_high = (1.0 - t_star).max(0.0).sqrt();
    let section = &w_low * cr(xi_low) + &w_high * (phase * cr(xi_high));
    let mut out = &basis * &section;
    let n = out.norm();
    if n > 0.0 {
        out /= cr(n);
    }
    Some((out, value(t_star)))
}

/// Refines a constrained optimum to a pure feasible witness by projected
/// local ascent through exactly-solved 2-D sections, seeded at the dominant
/// eigenvector of the mixture. Fails (non-fatally for callers holding the
/// mixed witness) if the pure value lands more than 1e-7 below the optimum.
pub fn pure_witness_refine(
    opt: &ConstrainedOptimum,
    m: &HermitianOperator,
    h: &Hamiltonian,
    e: EnergyBound,
) -> Result<CVec> {
    e.check_against(h)?;
    let e_val = e.value;
    let mm = m.matrix();

    // Seed: dominant eigenvector of ρ*, energy-feasible by construction of
    // the two-level mixture chosen with the smaller ⟨H⟩; fall back to the
    // Hamiltonian ground state.
    let rdec = eigh(&opt.rho_star.as_hermitian());
    let mut candidates: Vec<CVec> = Vec::new();
    for j in 0..rdec.eigenvalues.len().min(2) {
        if rdec.eigenvalues[j] > 1e-12 {
            candidates.push(rdec.eigenvectors.column(j).clone_owned());
        }
    }
    candidates.push(h.ground_vector());
    let mut phi = candidates
        .iter()
        .filter(|v| h.energy_of_vector(v) <= e_val + tol::ENERGY_SLACK)
        .max_by(|a, b| {
            let va = (a.adjoint() * mm * *a)[(0, 0)].re;
            let vb = (b.adjoint() * mm * *b)[(0, 0)].re;
            va.partial_cmp(&vb).unwrap()
        })
        .cloned()
        .unwrap_or_else(|| h.ground_vector());

    let shifted = mm - h.matrix() * cr(opt.lambda_star);
    let shifted_herm = HermitianOperator::new(crate::linops::herm_part(&shifted))?;
    let top_shifted = eigh(&shifted_herm);

    let mut value = (phi.adjoint() * mm * &phi)[(0, 0)].re;
    for _pass in 0..200 {
        let mut improved = false;
        let mut directions: Vec<CVec> = vec![mm * &phi, h.matrix() * &phi, h.ground_vector()];
        for j in 0..top_shifted.eigenvalues.len().min(2) {
            directions.push(top_shifted.eigenvectors.column(j).clone_owned());
        }
        for dir in directions {
            let overlap = (phi.adjoint() * &dir)[(0, 0)];
            let mut u = dir - &phi * overlap;
            let n = u.norm();
            if n < 1e-13 {
                continue;
            }
            u /= cr(n);
            if let Some((cand, cand_val)) = ascend_2d_section(&phi, &u, mm, h, e_val) {
                if cand_val > value + 1e-15 * (1.0 + value.abs()) {
                    phi = cand;
                    value = cand_val;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }

    if value < opt.value - 1e-7 {
        return Err(Error::NumericalFailure(format!(
            "pure witness value {value} short of optimum {} beyond tolerance",
            opt.value
        )));
    }
    Ok(phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::rng::{gaussian_cmat, substream};
    use crate::linops::{herm_part, max_abs, op_norm};

    const TOL: f64 = 1e-9;

    fn diag_h(entries: &[f64]) -> Hamiltonian {
        Hamiltonian::from_diagonal(entries.to_vec()).unwrap()
    }

    fn random_hermitian(seed: u64, d: usize) -> HermitianOperator {
        let mut rng = substream(5000 + seed, 0);
        let a = gaussian_cmat(&mut rng, d, d);
        HermitianOperator::new(herm_part(&a)).unwrap()
    }

    /// Dense enumeration oracle over qubit states, independent of the dual
    /// route: pure states on a Bloch grid plus all two-point mixtures that
    /// make the energy constraint exactly active (the objective and the
    /// constraint are both affine, so optimal mixed states are covered by
    /// pairs of grid points straddling the boundary).
    fn qubit_grid_oracle(m: &CMat, h: &Hamiltonian, e_val: f64, steps: usize) -> f64 {
        let mut best = f64::NEG_INFINITY;
        let bins = 2000usize;
        let (e_lo, e_hi) = (h.e0(), h.e_max());
        let width = (e_hi - e_lo).max(1e-12);
        let mut feasible_best: Vec<Option<(f64, f64)>> = vec![None; bins + 1]; // (h, val)
        let mut infeasible_best: Vec<Option<(f64, f64)>> = vec![None; bins + 1];
        for i in 0..=steps {
            let theta = std::f64::consts::PI * i as f64 / steps as f64;
            for j in 0..steps {
                let phase = 2.0 * std::f64::consts::PI * j as f64 / steps as f64;
                let v = CVec::from_vec(vec![
                    cr((theta / 2.0).cos()),
                    crate::linops::c(0.0, phase).exp() * cr((theta / 2.0).sin()),
                ]);
                let energy = h.energy_of_vector(&v);
                let val = (v.adjoint() * m * &v)[(0, 0)].re;
                if energy <= e_val {
                    best = best.max(val);
                }
                let bin = (((energy - e_lo) / width) * bins as f64).round() as usize;
                let bin = bin.min(bins);
                let slot = if energy <= e_val {
                    &mut feasible_best[bin]
                } else {
                    &mut infeasible_best[bin]
                };
                if slot.is_none_or(|(_, v0)| val > v0) {
                    *slot = Some((energy, val));
                }
            }
        }
        for q in feasible_best.iter().flatten() {
            for p in infeasible_best.iter().flatten() {
                let t = (p.0 - e_val) / (p.0 - q.0);
                if (0.0..=1.0).contains(&t) {
                    best = best.max(t * q.1 + (1.0 - t) * p.1);
                }
            }
        }
        best
    }

    #[test]
    fn identity_objective_gives_one() {
        let h = diag_h(&[0.0, 1.0, 2.0]);
        let m = HermitianOperator::new(CMat::identity(3, 3)).unwrap();
        let opt = max_linear_over_energy_ball(&m, &h, EnergyBound::new(0.5)).unwrap();
        assert!((opt.value - 1.0).abs() < TOL);
        assert!(h.energy_of(opt.rho_star.matrix()) <= 0.5 + TOL);
    }

    #[test]
    fn two_level_analytic_case() {
        // H = diag(0,1), M = diag(0,1), E = 0.25: value = E, active.
        let h = diag_h(&[0.0, 1.0]);
        let m = HermitianOperator::new(CMat::from_row_slice(
            2,
            2,
            &[cr(0.0), cr(0.0), cr(0.0), cr(1.0)],
        ))
        .unwrap();
        let opt = max_linear_over_energy_ball(&m, &h, EnergyBound::new(0.25)).unwrap();
        assert!((opt.value - 0.25).abs() < TOL);
        assert!(opt.active);
        assert!((h.energy_of(opt.rho_star.matrix()) - 0.25).abs() < 1e-9);
        // Complementary slackness.
        assert!(
            opt.lambda_star * (h.energy_of(opt.rho_star.matrix()) - 0.25).abs()
                <= 1e-8 * (opt.lambda_star.abs() + 1.0)
        );
        // Dense grid oracle over qubit states.
        let oracle = qubit_grid_oracle(m.matrix(), &h, 0.25, 600);
        assert!(opt.value + 1e-9 >= oracle);
        assert!(opt.value - oracle < 1e-5);
    }

    #[test]
    fn vacuous_constraint_returns_top_eigenvalue() {
        let h = diag_h(&[0.0, 1.0, 3.0]);
        let m = random_hermitian(1, 3);
        let top = eigh(&m).eigenvalues[0];
        let opt = max_linear_over_energy_ball(&m, &h, EnergyBound::new(4.0)).unwrap();
        assert!((opt.value - top).abs() < TOL);
        assert!(!opt.active);
        assert!(opt.lambda_star == 0.0);
    }

    #[test]
    fn dual_matches_primal_on_random_instances() {
        for seed in 0..50 {
            let d = 2 + (seed as usize % 5);
            let m = random_hermitian(100 + seed, d);
            let evals: Vec<f64> = (0..d).map(|k| k as f64).collect();
            let h = diag_h(&evals);
            let e = EnergyBound::new(0.3 + 0.1 * (seed % 7) as f64);
            let opt = max_linear_over_energy_ball(&m, &h, e).unwrap();
            let primal = (m.matrix() * opt.rho_star.matrix()).trace().re;
            assert!(
                (opt.value - primal).abs() <= 1e-9 * (1.0 + opt.value.abs()),
                "gap {} at seed {seed}",
                opt.value - primal
            );
            assert!(h.energy_of(opt.rho_star.matrix()) <= e.value + 1e-9);
            assert!((opt.rho_star.trace() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn random_qubit_instances_match_grid_oracle() {
        for seed in 0..10 {
            let m = random_hermitian(200 + seed, 2);
            let h = diag_h(&[0.0, 1.0]);
            let e = EnergyBound::new(0.1 + 0.08 * seed as f64);
            let opt = max_linear_over_energy_ball(&m, &h, e).unwrap();
            let oracle = qubit_grid_oracle(m.matrix(), &h, e.value, 600);
            assert!(oracle <= opt.value + 1e-9);
            assert!(opt.value - oracle <= 1e-4, "value {} oracle {oracle}", opt.value);
        }
    }

    #[test]
    fn rejects_energy_at_or_below_ground() {
        let h = diag_h(&[0.5, 1.0]);
        let m = random_hermitian(2, 2);
        assert!(max_linear_over_energy_ball(&m, &h, EnergyBound::new(0.5)).is_err());
        assert!(max_linear_over_energy_ball(&m, &h, EnergyBound::new(0.2)).is_err());
    }

    #[test]
    fn enorm_identity_is_one() {
        let h = diag_h(&[0.0, 1.0, 2.0]);
        for e in [0.1, 0.5, 5.0] {
            let val = enorm(&CMat::identity(3, 3), &h, EnergyBound::new(e)).unwrap();
            assert!((val - 1.0).abs() < TOL);
        }
    }

    #[test]
    fn enorm_projector_analytic() {
        // H = diag(0,1), X = |1⟩⟨1|: ‖X‖_E = √min(E,1).
        let h = diag_h(&[0.0, 1.0]);
        let mut x = CMat::zeros(2, 2);
        x[(1, 1)] = cr(1.0);
        for e in [0.1, 0.25, 0.5, 2.0] {
            let val = enorm(&x, &h, EnergyBound::new(e)).unwrap();
            let expected = e.min(1.0).sqrt();
            assert!((val - expected).abs() < TOL, "E={e}: {val} vs {expected}");
        }
    }

    #[test]
    fn enorm_unconstrained_matches_operator_norm() {
        for seed in 0..10 {
            let mut rng = substream(5100 + seed, 0);
            let x = gaussian_cmat(&mut rng, 4, 3);
            let h = diag_h(&[0.0, 1.0, 2.0]);
            let e = EnergyBound::new(h.e_max() + 1.0);
            let val = enorm(&x, &h, e).unwrap();
            assert!((val - op_norm(&x)).abs() < 1e-9);
            // And never exceeds the operator norm at any E.
            let small = enorm(&x, &h, EnergyBound::new(0.3)).unwrap();
            assert!(small <= op_norm(&x) + 1e-12);
        }
    }

    #[test]
    fn enorm_monotone_and_concave_in_energy() {
        for seed in 0..100 {
            let mut rng = substream(5200 + seed, 0);
            let d = 2 + (seed as usize % 3);
            let x = gaussian_cmat(&mut rng, d, d);
            let evals: Vec<f64> = (0..d).map(|k| k as f64).collect();
            let h = diag_h(&evals);
            let e1 = 0.1 + 0.3 * ((seed % 5) as f64);
            let e2 = e1 + 0.2 + 0.25 * ((seed % 3) as f64);
            let mid = 0.5 * (e1 + e2);
            let n1 = enorm(&x, &h, EnergyBound::new(e1)).unwrap();
            let n2 = enorm(&x, &h, EnergyBound::new(e2)).unwrap();
            let nm = enorm(&x, &h, EnergyBound::new(mid)).unwrap();
            assert!(n1 <= n2 + 1e-10, "monotonicity at seed {seed}");
            // Midpoint concavity of E ↦ ‖X‖²_E.
            assert!(
                nm * nm >= 0.5 * (n1 * n1 + n2 * n2) - 1e-9,
                "concavity at seed {seed}"
            );
            // Norm-equivalence bound between energies.
            let factor = ((e2 - h.e0()) / (e1 - h.e0())).sqrt();
            assert!(n2 <= factor * n1 + 1e-9);
        }
    }

    #[test]
    fn enorm_norm_axioms() {
        for seed in 0..50 {
            let mut rng = substream(5300 + seed, 0);
            let d = 3;
            let x = gaussian_cmat(&mut rng, d, d);
            let y = gaussian_cmat(&mut rng, d, d);
            let h = diag_h(&[0.0, 1.0, 2.0]);
            let e = EnergyBound::new(0.7);
            let nx = enorm(&x, &h, e).unwrap();
            let ny = enorm(&y, &h, e).unwrap();
            let nsum = enorm(&(&x + &y), &h, e).unwrap();
            assert!(nsum <= nx + ny + 1e-9);
            let scaled = enorm(&(&x * cr(-2.5)), &h, e).unwrap();
            assert!((scaled - 2.5 * nx).abs() < 1e-9);
        }
    }

    #[test]
    fn smoothed_enorm_identities() {
        let h = diag_h(&[0.0, 1.0]);
        let e = EnergyBound::new(0.25);
        let sigma = crate::quantum::reference_state(2);
        let sp0 = crate::quantum::SmoothingParams::new(0.0, sigma.clone()).unwrap();
        let mut rng = substream(5400, 0);
        let x = gaussian_cmat(&mut rng, 2, 2);
        let base = enorm(&x, &h, e).unwrap();
        assert!((enorm_smoothed(&x, &h, e, &sp0).unwrap() - base).abs() < 1e-12);

        let eye = CMat::identity(2, 2);
        for p in [0.0, 0.2, 0.9] {
            let sp = crate::quantum::SmoothingParams::new(p, sigma.clone()).unwrap();
            assert!((enorm_smoothed(&eye, &h, e, &sp).unwrap() - 1.0).abs() < 1e-12);
        }

        // Smoothing perturbs the squared norm by at most p‖X‖².
        for p in [1e-1, 1e-2, 1e-3] {
            let sp = crate::quantum::SmoothingParams::new(p, sigma.clone()).unwrap();
            let sm = enorm_smoothed(&x, &h, e, &sp).unwrap();
            let norm2 = op_norm(&x).powi(2);
            assert!((sm * sm - base * base).abs() <= p * norm2 + 1e-12);
        }
    }

    #[test]
    fn pure_witness_inactive_case_is_top_eigenvector() {
        let h = diag_h(&[0.0, 1.0, 2.0]);
        let m = random_hermitian(3, 3);
        let e = EnergyBound::new(10.0);
        let opt = max_linear_over_energy_ball(&m, &h, e).unwrap();
        let phi = pure_witness_refine(&opt, &m, &h, e).unwrap();
        let val = (phi.adjoint() * m.matrix() * &phi)[(0, 0)].re;
        assert!((val - eigh(&m).eigenvalues[0]).abs() < 1e-9);
    }

    #[test]
    fn pure_witness_two_level_case() {
        let h = diag_h(&[0.0, 1.0]);
        let m = HermitianOperator::new(CMat::from_row_slice(
            2,
            2,
            &[cr(0.0), cr(0.0), cr(0.0), cr(1.0)],
        ))
        .unwrap();
        let e = EnergyBound::new(0.25);
        let opt = max_linear_over_energy_ball(&m, &h, e).unwrap();
        let phi = pure_witness_refine(&opt, &m, &h, e).unwrap();
        assert!(h.energy_of_vector(&phi) <= 0.25 + 1e-9);
        // |φ₁|² = 0.25 for any maximizer.
        assert!((phi[1].norm_sqr() - 0.25).abs() < 1e-7);
    }

    #[test]
    fn pure_witness_matches_dual_on_random_instances() {
        for seed in 0..30 {
            let d = 2 + (seed as usize % 5);
            let m = random_hermitian(400 + seed, d);
            let evals: Vec<f64> = (0..d).map(|k| 0.5 * k as f64).collect();
            let h = diag_h(&evals);
            let e = EnergyBound::new(0.2 + 0.15 * ((seed % 4) as f64));
            let opt = max_linear_over_energy_ball(&m, &h, e).unwrap();
            let phi = pure_witness_refine(&opt, &m, &h, e).unwrap();
            let val = (phi.adjoint() * m.matrix() * &phi)[(0, 0)].re;
            assert!((phi.norm() - 1.0).abs() < 1e-10);
            assert!(h.energy_of_vector(&phi) <= e.value + 1e-9);
            assert!(val >= opt.value - 1e-7, "pure {val} vs dual {}", opt.value);
        }
    }

    #[test]
    fn hamiltonian_sorts_and_validates() {
        let h = Hamiltonian::from_diagonal(vec![2.0, 0.0, 1.0]).unwrap();
        assert_eq!(h.eigenvalues(), &[0.0, 1.0, 2.0]);
        assert_eq!(h.e0(), 0.0);
        assert!(Hamiltonian::from_diagonal(vec![-1.0, 0.0]).is_err());
        // Non-orthonormal basis rejected.
        let bad = CMat::from_row_slice(2, 2, &[cr(1.0), cr(1.0), cr(0.0), cr(1.0)]);
        assert!(Hamiltonian::new(vec![0.0, 1.0], bad).is_err());
    }

    #[test]
    fn hamiltonian_with_rotated_basis_reconstructs() {
        let mut rng = substream(5500, 0);
        let q = gaussian_cmat(&mut rng, 3, 3).qr().q();
        let h = Hamiltonian::new(vec![0.0, 1.0, 2.5], q.clone()).unwrap();
        let mut expected = CMat::zeros(3, 3);
        for (j, &e) in h.eigenvalues().iter().enumerate() {
            let col = h.basis().column(j);
            expected += (col * cr(e)) * col.adjoint();
        }
        assert!(max_abs(&(h.matrix() - &expected)) < 1e-12);
    }
}
