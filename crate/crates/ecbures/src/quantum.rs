//! Quantum operations, Stinespring dilations, and smoothing maps.
//!
//! A quantum operation is held as a Kraus family `{K_k}` with
//! Σ K†K ⪯ I (trace-nonincreasing); the trace-preserving case is flagged as
//! a channel. The Stinespring operator stacks the family as
//! V|φ⟩ = Σ_k (K_k|φ⟩)⊗|k⟩ with the environment as the *second* tensor
//! factor of H_B⊗H_E, which fixes all index arithmetic below.

use num_complex::Complex64;

use crate::linops::{
    self, cr, eigh, kron, max_abs, partial_trace_mat, support_projector, support_rank, CMat, CVec,
    Factor, HermitianOperator, PositiveOperator,
};
use crate::tol;
use crate::{Error, Result};

/// Completely positive trace-nonincreasing map held as a Kraus family.
#[derive(Debug, Clone)]
pub struct QuantumOperation {
    d_in: usize,
    d_out: usize,
    kraus: Vec<CMat>,
    is_channel: bool,
}

impl QuantumOperation {
    pub fn new(d_in: usize, d_out: usize, kraus: Vec<CMat>) -> Result<Self> {
        if d_in == 0 || d_out == 0 || kraus.is_empty() {
            return Err(Error::InvalidInput(
                "operation needs positive dimensions and at least one Kraus operator".into(),
            ));
        }
        for (k, op) in kraus.iter().enumerate() {
            if op.nrows() != d_out || op.ncols() != d_in {
                return Err(Error::InvalidInput(format!(
                    "Kraus operator {k} is {}x{}, expected {d_out}x{d_in}",
                    op.nrows(),
                    op.ncols()
                )));
            }
            if op.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "Kraus operator {k} has non-finite entries"
                )));
            }
        }
        let gram = kraus_gram(&kraus);
        let herm = HermitianOperator::new(gram.clone())?;
        let top = eigh(&herm).eigenvalues.first().copied().unwrap_or(0.0);
        if top > 1.0 + tol::TRACE_NONINCREASING {
            return Err(Error::InvalidInput(format!(
                "not trace-nonincreasing: λ_max(ΣK†K) = {top:.12}"
            )));
        }
        let is_channel = max_abs(&(&gram - CMat::identity(d_in, d_in))) <= tol::TRACE_NONINCREASING;
        Ok(Self {
            d_in,
            d_out,
            kraus,
            is_channel,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            d_in: dim,
            d_out: dim,
            kraus: vec![CMat::identity(dim, dim)],
            is_channel: true,
        }
    }

    /// Channel implementing a single unitary (or isometric) Kraus operator.
    pub fn from_single_kraus(k: CMat) -> Result<Self> {
        let (d_out, d_in) = (k.nrows(), k.ncols());
        Self::new(d_in, d_out, vec![k])
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    pub fn kraus_count(&self) -> usize {
        self.kraus.len()
    }

    pub fn is_channel(&self) -> bool {
        self.is_channel
    }

    /// Σ K M K† on a raw matrix.
    pub fn apply_mat(&self, m: &CMat) -> CMat {
        let mut out = CMat::zeros(self.d_out, self.d_out);
        for k in &self.kraus {
            out += k * m * k.adjoint();
        }
        out
    }

    /// Σ K P K† with trace monotonicity checked.
    pub fn apply(&self, p: &PositiveOperator) -> Result<PositiveOperator> {
        if p.dim() != self.d_in {
            return Err(Error::InvalidInput(format!(
                "apply: state dimension {} does not match d_in {}",
                p.dim(),
                self.d_in
            )));
        }
        let out = PositiveOperator::from_psd_unchecked(self.apply_mat(p.matrix()));
        debug_assert!(out.trace() <= p.trace() + tol::TRACE_NONINCREASING);
        Ok(out)
    }

    /// (Φ⊗id_R)(M) on a raw matrix over H_A⊗H_R, via Kraus operators K⊗I_R.
    pub fn apply_extended_mat(&self, m: &CMat, d_r: usize) -> CMat {
        let eye_r = CMat::identity(d_r, d_r);
        let mut out = CMat::zeros(self.d_out * d_r, self.d_out * d_r);
        for k in &self.kraus {
            let ext = kron(k, &eye_r);
            out += &ext * m * ext.adjoint();
        }
        out
    }

    /// (Φ⊗id_R)(P) for a positive operator on H_A⊗H_R.
    pub fn apply_extended(&self, p: &PositiveOperator, d_r: usize) -> Result<PositiveOperator> {
        if p.dim() != self.d_in * d_r {
            return Err(Error::InvalidInput(format!(
                "apply_extended: state dimension {} does not match d_in·d_R = {}",
                p.dim(),
                self.d_in * d_r
            )));
        }
        Ok(PositiveOperator::from_psd_unchecked(
            self.apply_extended_mat(p.matrix(), d_r),
        ))
    }
}

fn kraus_gram(kraus: &[CMat]) -> CMat {
    let d_in = kraus[0].ncols();
    let mut gram = CMat::zeros(d_in, d_in);
    for k in kraus {
        gram += k.adjoint() * k;
    }
    gram
}

/// A contraction V: H_A → H_B⊗H_E with explicit dimensions; an isometry
/// exactly when the induced operation is a channel.
#[derive(Debug, Clone)]
pub struct StinespringOperator {
    d_a: usize,
    d_b: usize,
    d_e: usize,
    v: CMat,
}

impl StinespringOperator {
    pub fn new(d_a: usize, d_b: usize, d_e: usize, v: CMat) -> Result<Self> {
        if v.nrows() != d_b * d_e || v.ncols() != d_a {
            return Err(Error::InvalidInput(format!(
                "Stinespring operator is {}x{}, expected {}x{d_a}",
                v.nrows(),
                v.ncols(),
                d_b * d_e
            )));
        }
        let norm = linops::op_norm(&v);
        if norm > 1.0 + tol::CONTRACTION_SLACK {
            return Err(Error::InvalidInput(format!(
                "Stinespring operator is not a contraction: ‖V‖ = {norm:.12}"
            )));
        }
        Ok(Self { d_a, d_b, d_e, v })
    }

    pub fn d_a(&self) -> usize {
        self.d_a
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    pub fn d_e(&self) -> usize {
        self.d_e
    }

    pub fn matrix(&self) -> &CMat {
        &self.v
    }

    /// Tr_E VMV† on a raw matrix.
    pub fn apply_mat(&self, m: &CMat) -> CMat {
        let big = &self.v * m * self.v.adjoint();
        partial_trace_mat(&big, self.d_b, self.d_e, Factor::Second)
            .expect("dimensions fixed by construction")
    }
}

/// Convex smoothing toward a fixed nondegenerate reference state:
/// Θ_p(ρ) = (1−p)ρ + pσ.
#[derive(Debug, Clone)]
pub struct SmoothingParams {
    p: f64,
    sigma: PositiveOperator,
}

impl SmoothingParams {
    /// `p` may be 0 (no smoothing) or 1 (full replacement); `sigma` must be
    /// a full-rank unit-trace state.
    pub fn new(p: f64, sigma: PositiveOperator) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidInput(format!(
                "smoothing parameter p = {p} outside [0, 1]"
            )));
        }
        if !sigma.is_unit_trace() {
            return Err(Error::InvalidInput(format!(
                "smoothing reference must have unit trace, got {}",
                sigma.trace()
            )));
        }
        if support_rank(&sigma, tol::DEFAULT_RANK_TOL) < sigma.dim() {
            return Err(Error::InvalidInput(
                "smoothing reference state is rank-deficient".into(),
            ));
        }
        Ok(Self { p, sigma })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn sigma(&self) -> &PositiveOperator {
        &self.sigma
    }

    pub fn dim(&self) -> usize {
        self.sigma.dim()
    }

    /// Θ_p on a raw matrix (trace-weighted so operations mix correctly).
    pub fn smooth_mat(&self, m: &CMat) -> CMat {
        if self.p == 0.0 {
            return m.clone();
        }
        m * cr(1.0 - self.p) + self.sigma.matrix() * cr(self.p * m.trace().re)
    }
}

/// The default nondegenerate reference state on a d-dimensional space:
/// diag(1, 1/2, …, 1/d) normalized. Distinct eigenvalues keep
/// degeneracy-related edge cases visible.
pub fn reference_state(dim: usize) -> PositiveOperator {
    let weights: Vec<f64> = (1..=dim).map(|k| 1.0 / k as f64).collect();
    let z: f64 = weights.iter().sum();
    let m = CMat::from_fn(dim, dim, |i, j| {
        if i == j {
            cr(weights[i] / z)
        } else {
            cr(0.0)
        }
    });
    PositiveOperator::from_psd_unchecked(m)
}

/// Θ_p(ρ) = (1−p)ρ + pσ for a unit-trace state; full rank for p > 0.
pub fn smooth_state(rho: &PositiveOperator, sp: &SmoothingParams) -> Result<PositiveOperator> {
    if rho.dim() != sp.dim() {
        return Err(Error::InvalidInput(format!(
            "smooth_state: state dim {} vs reference dim {}",
            rho.dim(),
            sp.dim()
        )));
    }
    Ok(PositiveOperator::from_psd_unchecked(
        sp.smooth_mat(rho.matrix()),
    ))
}

/// Stacks the Kraus family into V|φ⟩ = Σ_k (K_k|φ⟩)⊗|k⟩ with
/// d_E = number of Kraus operators.
pub fn stinespring_from_kraus(op: &QuantumOperation) -> StinespringOperator {
    let (d_a, d_b, d_e) = (op.d_in(), op.d_out(), op.kraus_count());
    let mut v = CMat::zeros(d_b * d_e, d_a);
    for (e, k) in op.kraus().iter().enumerate() {
        for b in 0..d_b {
            for a in 0..d_a {
                v[(b * d_e + e, a)] = k[(b, a)];
            }
        }
    }
    StinespringOperator {
        d_a,
        d_b,
        d_e,
        v,
    }
}

/// Reads the Kraus family back out of a Stinespring operator:
/// K_k = (I_B⊗⟨k|)V over the computational environment basis.
pub fn kraus_from_stinespring(v: &StinespringOperator) -> QuantumOperation {
    let (d_a, d_b, d_e) = (v.d_a, v.d_b, v.d_e);
    let kraus: Vec<CMat> = (0..d_e)
        .map(|e| CMat::from_fn(d_b, d_a, |b, a| v.v[(b * d_e + e, a)]))
        .collect();
    let gram = kraus_gram(&kraus);
    let is_channel = max_abs(&(&gram - CMat::identity(d_a, d_a))) <= tol::TRACE_NONINCREASING;
    QuantumOperation {
        d_in: d_a,
        d_out: d_b,
        kraus,
        is_channel,
    }
}

/// A common Stinespring representation for two operations on the same
/// spaces: the environment dimension is max of the Kraus counts plus `pad`,
/// with the smaller family embedded into the first environment coordinates
/// and the rest zero-padded.
pub fn common_stinespring(
    phi: &QuantumOperation,
    psi: &QuantumOperation,
    pad: usize,
) -> Result<(StinespringOperator, StinespringOperator)> {
    if phi.d_in() != psi.d_in() || phi.d_out() != psi.d_out() {
        return Err(Error::InvalidInput(format!(
            "common_stinespring: shapes {}→{} vs {}→{} do not match",
            phi.d_in(),
            phi.d_out(),
            psi.d_in(),
            psi.d_out()
        )));
    }
    let d_e = phi.kraus_count().max(psi.kraus_count()) + pad;
    let extend = |op: &QuantumOperation| {
        let mut kraus = op.kraus().to_vec();
        kraus.resize(d_e, CMat::zeros(op.d_out(), op.d_in()));
        QuantumOperation {
            d_in: op.d_in(),
            d_out: op.d_out(),
            kraus,
            is_channel: op.is_channel(),
        }
    };
    Ok((
        stinespring_from_kraus(&extend(phi)),
        stinespring_from_kraus(&extend(psi)),
    ))
}

/// The complementary operation A → E obtained by tracing out the output
/// instead of the environment: Ψ̂(ρ) = Tr_B VρV†.
pub fn complementary(v: &StinespringOperator) -> QuantumOperation {
    let (d_a, d_b, d_e) = (v.d_a, v.d_b, v.d_e);
    let kraus: Vec<CMat> = (0..d_b)
        .map(|b| CMat::from_fn(d_e, d_a, |e, a| v.v[(b * d_e + e, a)]))
        .collect();
    let gram = kraus_gram(&kraus);
    let is_channel = max_abs(&(&gram - CMat::identity(d_a, d_a))) <= tol::TRACE_NONINCREASING;
    QuantumOperation {
        d_in: d_a,
        d_out: d_e,
        kraus,
        is_channel,
    }
}

/// Mixes an operation with a fixed state preparation:
/// Φ_p(ρ) = (1−p)Φ(ρ) + p·(Trρ)σ, as an explicit Kraus family
/// {√(1−p)·K_i} ∪ {√(pλ_j)·|b_j⟩⟨a_m|} over eigenpairs (λ_j, b_j) of σ.
/// For p > 0 the output of any state is full rank.
pub fn depolarize_operation(
    phi: &QuantumOperation,
    p: f64,
    sigma_out: &PositiveOperator,
) -> Result<QuantumOperation> {
    if sigma_out.dim() != phi.d_out() {
        return Err(Error::InvalidInput(format!(
            "depolarize_operation: reference dim {} vs d_out {}",
            sigma_out.dim(),
            phi.d_out()
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidInput(format!("p = {p} outside [0, 1]")));
    }
    if p == 0.0 {
        return Ok(phi.clone());
    }
    let decomp = eigh(&sigma_out.as_hermitian());
    let mut kraus: Vec<CMat> = phi
        .kraus()
        .iter()
        .map(|k| k * cr((1.0 - p).sqrt()))
        .collect();
    for (j, &lambda) in decomp.eigenvalues.iter().enumerate() {
        let weight = (p * lambda.max(0.0)).sqrt();
        let b_j = decomp.eigenvectors.column(j).clone_owned();
        for m in 0..phi.d_in() {
            let mut op = CMat::zeros(phi.d_out(), phi.d_in());
            for r in 0..phi.d_out() {
                op[(r, m)] = b_j[r] * cr(weight);
            }
            kraus.push(op);
        }
    }
    QuantumOperation::new(phi.d_in(), phi.d_out(), kraus)
}

/// Projector onto the support of Φ(σ) for a nondegenerate σ, which equals
/// the minimal subspace of H_B containing all outputs of Φ.
pub fn operation_support_subspace(
    phi: &QuantumOperation,
    sigma: &PositiveOperator,
) -> Result<HermitianOperator> {
    ensure_nondegenerate(sigma, phi.d_in())?;
    let out = phi.apply(sigma)?;
    Ok(support_projector(&out, tol::DEFAULT_RANK_TOL))
}

/// P_Ψ: projector onto the minimal subspace of H_E containing the supports
/// of all outputs of the complementary operation, computed as the support
/// of Ψ̂(σ) for a nondegenerate σ.
pub fn environment_support_projector(
    v_psi: &StinespringOperator,
    sigma: &PositiveOperator,
) -> Result<HermitianOperator> {
    ensure_nondegenerate(sigma, v_psi.d_a())?;
    let comp = complementary(v_psi);
    let out = comp.apply(sigma)?;
    Ok(support_projector(&out, tol::DEFAULT_RANK_TOL))
}

fn ensure_nondegenerate(sigma: &PositiveOperator, dim: usize) -> Result<()> {
    if sigma.dim() != dim {
        return Err(Error::InvalidInput(format!(
            "reference state dim {} does not match {dim}",
            sigma.dim()
        )));
    }
    if !sigma.is_unit_trace() {
        return Err(Error::InvalidInput(
            "reference state must have unit trace".into(),
        ));
    }
    if support_rank(sigma, tol::DEFAULT_RANK_TOL) < dim {
        return Err(Error::InvalidInput(
            "reference state is degenerate (rank-deficient)".into(),
        ));
    }
    Ok(())
}

/// A purification vector together with its factor dimensions.
#[derive(Debug, Clone)]
pub struct Purification {
    pub vector: CVec,
    pub d_system: usize,
    pub d_reference: usize,
}

/// Canonical purification ω = Σ √λ_i |e_i⟩⊗|i⟩ in the eigenbasis of ρ, with
/// d_R = rank(ρ). The rank cutoff is near machine precision (1e-13 relative)
/// so the partial-trace round trip stays below 1e-10.
pub fn purify(rho: &PositiveOperator) -> Result<Purification> {
    if !rho.is_unit_trace() {
        return Err(Error::InvalidInput(format!(
            "purify: state must have unit trace, got {}",
            rho.trace()
        )));
    }
    let decomp = eigh(&rho.as_hermitian());
    let lambda_max = decomp.eigenvalues.first().copied().unwrap_or(0.0);
    let cut = 1e-13 * lambda_max.max(1e-300);
    let kept: Vec<(usize, f64)> = decomp
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > cut)
        .map(|(i, &l)| (i, l))
        .collect();
    let d_r = kept.len().max(1);
    let d = rho.dim();
    let mut vector = CVec::zeros(d * d_r);
    for (slot, &(i, lambda)) in kept.iter().enumerate() {
        let col = decomp.eigenvectors.column(i);
        let w = cr(lambda.sqrt());
        for a in 0..d {
            vector[a * d_r + slot] += col[a] * w;
        }
    }
    Ok(Purification {
        vector,
        d_system: d,
        d_reference: d_r,
    })
}

/// Kraus rank (Choi rank) of an operation: the dimension of the span of its
/// Kraus operators, read off the Gram matrix G_ij = Tr K_i†K_j. Extended
/// outputs Φ⊗id(ω) of full-Schmidt pure states have exactly this rank, so
/// the full-rank-output condition for extended inputs holds iff the Kraus
/// rank is maximal (d_in·d_out).
pub fn kraus_rank(op: &QuantumOperation) -> usize {
    let n = op.kraus_count();
    let mut gram = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            gram[(i, j)] = (op.kraus()[i].adjoint() * &op.kraus()[j]).trace();
        }
    }
    let herm = HermitianOperator::new(linops::herm_part(&gram)).expect("gram is Hermitian");
    let eigs = eigh(&herm).eigenvalues;
    let top = eigs.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return 0;
    }
    eigs.iter().filter(|&&l| l > tol::DEFAULT_RANK_TOL * top).count()
}

/// Trace of the operation applied to a raw matrix; cheap form Tr[ΣK†K · m].
pub fn output_trace(op: &QuantumOperation, m: &CMat) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for k in op.kraus() {
        acc += (k.adjoint() * k * m).trace();
    }
    acc.re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::rng::{gaussian_cmat, random_density, substream};
    use crate::linops::c;

    fn random_channel(seed: u64, d_a: usize, d_b: usize, k: usize) -> QuantumOperation {
        let mut rng = substream(1000 + seed, 0);
        let g = gaussian_cmat(&mut rng, d_b * k, d_a);
        let q = g.qr().q();
        let kraus: Vec<CMat> = (0..k)
            .map(|i| q.view_range(i * d_b..(i + 1) * d_b, 0..d_a).clone_owned())
            .collect();
        QuantumOperation::new(d_a, d_b, kraus).unwrap()
    }

    fn random_state(seed: u64, d: usize) -> PositiveOperator {
        let mut rng = substream(2000 + seed, 0);
        PositiveOperator::new(random_density(&mut rng, d, d)).unwrap()
    }

    #[test]
    fn identity_channel_acts_trivially() {
        let id = QuantumOperation::identity(3);
        let rho = random_state(0, 3);
        let out = id.apply(&rho).unwrap();
        assert!(max_abs(&(out.matrix() - rho.matrix())) < 1e-14);
        assert!(id.is_channel());
    }

    #[test]
    fn depolarizing_channel_outputs_maximally_mixed() {
        // Full depolarization realized as preparation of I/d.
        let d = 2;
        let sigma = PositiveOperator::new(CMat::identity(d, d) / cr(d as f64)).unwrap();
        let chan = depolarize_operation(&QuantumOperation::identity(d), 1.0, &sigma).unwrap();
        let rho = random_state(1, d);
        let out = chan.apply(&rho).unwrap();
        assert!(max_abs(&(out.matrix() - sigma.matrix())) < 1e-12);
    }

    #[test]
    fn kraus_and_stinespring_routes_agree() {
        let op = random_channel(3, 2, 3, 2);
        let v = stinespring_from_kraus(&op);
        let rho = random_state(2, 2);
        let via_kraus = op.apply_mat(rho.matrix());
        let via_v = v.apply_mat(rho.matrix());
        assert!(max_abs(&(&via_kraus - &via_v)) < 1e-12);
    }

    #[test]
    fn unitary_channel_has_scalar_environment() {
        let mut rng = substream(3000, 0);
        let g = gaussian_cmat(&mut rng, 2, 2);
        let u = g.qr().q();
        let op = QuantumOperation::from_single_kraus(u.clone()).unwrap();
        let v = stinespring_from_kraus(&op);
        assert_eq!(v.d_e(), 1);
        assert!(max_abs(&(v.matrix() - &u)) < 1e-14);
    }

    #[test]
    fn stinespring_round_trip_preserves_action() {
        let op = random_channel(4, 3, 2, 3);
        let back = kraus_from_stinespring(&stinespring_from_kraus(&op));
        assert_eq!(back.kraus_count(), op.kraus_count());
        for seed in 0..5 {
            let rho = random_state(30 + seed, 3);
            let a = op.apply_mat(rho.matrix());
            let b = back.apply_mat(rho.matrix());
            assert!(max_abs(&(&a - &b)) < 1e-12);
        }
    }

    #[test]
    fn kraus_from_zero_stinespring_is_zero() {
        let v = StinespringOperator::new(2, 2, 2, CMat::zeros(4, 2)).unwrap();
        let op = kraus_from_stinespring(&v);
        for k in op.kraus() {
            assert_eq!(max_abs(k), 0.0);
        }
        assert!(!op.is_channel());
    }

    #[test]
    fn kraus_from_random_contraction_matches_partial_trace() {
        let mut rng = substream(3100, 0);
        let g = gaussian_cmat(&mut rng, 6, 2);
        let v_mat = &g * cr(0.9 / linops::op_norm(&g));
        let v = StinespringOperator::new(2, 2, 3, v_mat).unwrap();
        let op = kraus_from_stinespring(&v);
        let rho = random_state(31, 2);
        let a = op.apply_mat(rho.matrix());
        let b = v.apply_mat(rho.matrix());
        assert!(max_abs(&(&a - &b)) < 1e-12);
    }

    #[test]
    fn common_stinespring_of_equal_operations_is_identical() {
        let op = random_channel(5, 2, 2, 2);
        let (v1, v2) = common_stinespring(&op, &op, 0).unwrap();
        assert_eq!(v1.matrix(), v2.matrix());
        assert_eq!(v1.d_e(), 2);
    }

    #[test]
    fn common_stinespring_pads_environment() {
        let u_chan = random_channel(6, 2, 2, 1);
        let two = random_channel(7, 2, 2, 2);
        let (va, vb) = common_stinespring(&u_chan, &two, 0).unwrap();
        assert_eq!(va.d_e(), 2);
        assert_eq!(vb.d_e(), 2);

        let (va3, vb3) = common_stinespring(&u_chan, &two, 3).unwrap();
        assert_eq!(va3.d_e(), 5);
        // Action equality preserved after padding.
        for seed in 0..5 {
            let rho = random_state(40 + seed, 2);
            assert!(max_abs(&(va3.apply_mat(rho.matrix()) - u_chan.apply_mat(rho.matrix()))) < 1e-12);
            assert!(max_abs(&(vb3.apply_mat(rho.matrix()) - two.apply_mat(rho.matrix()))) < 1e-12);
        }
    }

    #[test]
    fn complementary_of_unitary_is_trace_preparation() {
        let op = random_channel(8, 2, 2, 1);
        let v = stinespring_from_kraus(&op);
        let comp = complementary(&v);
        let rho = random_state(8, 2);
        let out = comp.apply_mat(rho.matrix());
        // Scalar environment: Ψ̂(ρ) = (Trρ)|0⟩⟨0| on a 1-dim space.
        assert_eq!(out.nrows(), 1);
        assert!((out[(0, 0)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn complementary_balances_trace() {
        let mut rng = substream(3200, 0);
        let g = gaussian_cmat(&mut rng, 6, 2);
        let v_mat = &g * cr(0.8 / linops::op_norm(&g));
        let v = StinespringOperator::new(2, 2, 3, v_mat).unwrap();
        let direct = kraus_from_stinespring(&v);
        let comp = complementary(&v);
        for seed in 0..20 {
            let rho = random_state(50 + seed, 2);
            let t1 = direct.apply_mat(rho.matrix()).trace().re;
            let t2 = comp.apply_mat(rho.matrix()).trace().re;
            assert!((t1 - t2).abs() < 1e-12);
        }
    }

    #[test]
    fn smooth_state_examples() {
        let rho = random_state(9, 2);
        let sigma = reference_state(2);
        let sp0 = SmoothingParams::new(0.0, sigma.clone()).unwrap();
        let same = smooth_state(&rho, &sp0).unwrap();
        assert!(max_abs(&(same.matrix() - rho.matrix())) < 1e-15);

        let sp = SmoothingParams::new(0.3, sigma.clone()).unwrap();
        let fixed = smooth_state(&sigma, &sp).unwrap();
        assert!(max_abs(&(fixed.matrix() - sigma.matrix())) < 1e-15);

        // ρ = |0⟩⟨0|, σ = I/2, p = 0.1 → diag(0.95, 0.05).
        let ket0 = PositiveOperator::new(CMat::from_row_slice(
            2,
            2,
            &[cr(1.0), cr(0.0), cr(0.0), cr(0.0)],
        ))
        .unwrap();
        let half = PositiveOperator::new(CMat::identity(2, 2) / cr(2.0)).unwrap();
        let sp1 = SmoothingParams::new(0.1, half).unwrap();
        let mixed = smooth_state(&ket0, &sp1).unwrap();
        assert!((mixed.matrix()[(0, 0)].re - 0.95).abs() < 1e-15);
        assert!((mixed.matrix()[(1, 1)].re - 0.05).abs() < 1e-15);
    }

    #[test]
    fn smoothing_perturbation_is_bounded() {
        let rho = random_state(10, 3);
        let sp = SmoothingParams::new(0.05, reference_state(3)).unwrap();
        let theta = smooth_state(&rho, &sp).unwrap();
        let diff = rho.matrix() - theta.matrix();
        assert!(linops::trace_norm(&diff) <= 2.0 * 0.05 + 1e-12);
        assert_eq!(support_rank(&theta, tol::DEFAULT_RANK_TOL), 3);
    }

    #[test]
    fn depolarized_outputs_are_uniformly_positive() {
        let p = 0.1;
        let sigma = reference_state(2);
        let lambda_min_sigma = eigh(&sigma.as_hermitian()).eigenvalues.last().copied().unwrap();
        let phi = random_channel(11, 2, 2, 2);
        let phi_p = depolarize_operation(&phi, p, &sigma).unwrap();
        for seed in 0..20 {
            let rho = random_state(60 + seed, 2);
            let out = phi_p.apply(&rho).unwrap();
            let min_eig = eigh(&out.as_hermitian()).eigenvalues.last().copied().unwrap();
            assert!(min_eig >= p * lambda_min_sigma - 1e-10);
        }
    }

    #[test]
    fn depolarize_with_p_zero_is_identity_on_kraus() {
        let phi = random_channel(12, 2, 3, 2);
        let same = depolarize_operation(&phi, 0.0, &reference_state(3)).unwrap();
        assert_eq!(same.kraus_count(), phi.kraus_count());
    }

    #[test]
    fn support_subspace_of_identity_is_full() {
        let id = QuantumOperation::identity(3);
        let proj = operation_support_subspace(&id, &reference_state(3)).unwrap();
        assert!(max_abs(&(proj.matrix() - CMat::identity(3, 3))) < 1e-10);
    }

    #[test]
    fn support_subspace_of_projective_measurement_is_rank_one() {
        // Φ(ρ) = ⟨0|ρ|0⟩·|0⟩⟨0|: single Kraus |0⟩⟨0|.
        let mut k = CMat::zeros(2, 2);
        k[(0, 0)] = cr(1.0);
        let phi = QuantumOperation::new(2, 2, vec![k]).unwrap();
        let proj = operation_support_subspace(&phi, &reference_state(2)).unwrap();
        let mut expected = CMat::zeros(2, 2);
        expected[(0, 0)] = cr(1.0);
        assert!(max_abs(&(proj.matrix() - &expected)) < 1e-12);
    }

    #[test]
    fn support_containment_for_random_rank_deficient_operations() {
        // Containment oracle: support(Φ(ρ)) inside support(Φ(σ)).
        for seed in 0..10 {
            let mut rng = substream(3300 + seed, 0);
            let d = 3;
            // Rank-deficient output: Kraus operators with a common zero row.
            let mut kraus = Vec::new();
            for _ in 0..2 {
                let mut k = gaussian_cmat(&mut rng, d, d) * cr(0.3);
                for col in 0..d {
                    k[(d - 1, col)] = cr(0.0);
                }
                kraus.push(k);
            }
            let phi = match QuantumOperation::new(d, d, kraus) {
                Ok(op) => op,
                Err(_) => continue,
            };
            let proj = operation_support_subspace(&phi, &reference_state(d))
                .unwrap()
                .into_matrix();
            let eye = CMat::identity(d, d);
            for inner in 0..20 {
                let rho = random_state(700 + 20 * seed + inner, d);
                let out = phi.apply(&rho).unwrap();
                let residual = max_abs(&((&eye - &proj) * out.matrix()));
                assert!(residual < 1e-8, "residual {residual}");
            }
        }
    }

    #[test]
    fn environment_projector_rank_matches_kraus_independence() {
        let psi = random_channel(13, 2, 2, 2);
        let v = stinespring_from_kraus(&psi);
        let p = environment_support_projector(&v, &reference_state(2)).unwrap();
        assert!((p.matrix().trace().re - 2.0).abs() < 1e-9);

        // Padding leaves the rank unchanged.
        let (_, v_pad) = common_stinespring(&psi, &psi, 3).unwrap();
        let p_pad = environment_support_projector(&v_pad, &reference_state(2)).unwrap();
        assert!((p_pad.matrix().trace().re - 2.0).abs() < 1e-9);
    }

    #[test]
    fn purify_pure_state_is_product() {
        let mut v = CVec::zeros(3);
        v[0] = c(0.6, 0.0);
        v[1] = c(0.0, 0.8);
        let rho = PositiveOperator::new(&v * v.adjoint()).unwrap();
        let purif = purify(&rho).unwrap();
        assert_eq!(purif.d_reference, 1);
        let outer = PositiveOperator::from_psd_unchecked(&purif.vector * purif.vector.adjoint());
        let back = linops::partial_trace(&outer, 3, 1, Factor::Second).unwrap();
        assert!(max_abs(&(back.matrix() - rho.matrix())) < 1e-12);
    }

    #[test]
    fn purify_maximally_mixed_qubit_is_bell_like() {
        let rho = PositiveOperator::new(CMat::identity(2, 2) / cr(2.0)).unwrap();
        let purif = purify(&rho).unwrap();
        assert_eq!(purif.d_reference, 2);
        let outer = PositiveOperator::from_psd_unchecked(&purif.vector * purif.vector.adjoint());
        let back = linops::partial_trace(&outer, 2, 2, Factor::Second).unwrap();
        assert!(max_abs(&(back.matrix() - rho.matrix())) < 1e-12);
    }

    #[test]
    fn purify_round_trip_rank_three() {
        let mut rng = substream(3400, 0);
        let rho = PositiveOperator::new(random_density(&mut rng, 4, 3)).unwrap();
        let purif = purify(&rho).unwrap();
        assert_eq!(purif.d_reference, 3);
        let outer = PositiveOperator::from_psd_unchecked(&purif.vector * purif.vector.adjoint());
        let back = linops::partial_trace(&outer, 4, 3, Factor::Second).unwrap();
        assert!(max_abs(&(back.matrix() - rho.matrix())) < 1e-10);
    }

    #[test]
    fn apply_extended_on_product_input() {
        let phi = random_channel(14, 2, 2, 2);
        let rho = random_state(70, 2);
        let tau = random_state(71, 3);
        let prod = PositiveOperator::new(kron(rho.matrix(), tau.matrix())).unwrap();
        let out = phi.apply_extended(&prod, 3).unwrap();
        let expected = kron(&phi.apply_mat(rho.matrix()), tau.matrix());
        assert!(max_abs(&(out.matrix() - &expected)) < 1e-12);
    }

    #[test]
    fn apply_extended_matches_choi_oracle() {
        // Choi-matrix oracle: C = Σ_ij Φ(|i⟩⟨j|) ⊗ |i⟩⟨j| equals
        // (Φ⊗id)(d·|Ω⟩⟨Ω|) on the maximally entangled vector.
        let d = 2;
        let phi = random_channel(15, d, d, 3);
        let mut omega = CVec::zeros(d * d);
        for i in 0..d {
            omega[i * d + i] = cr(1.0 / (d as f64).sqrt());
        }
        let ent = PositiveOperator::new(&omega * omega.adjoint()).unwrap();
        let out = phi.apply_extended(&ent, d).unwrap();

        let mut choi = CMat::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                let mut unit = CMat::zeros(d, d);
                unit[(i, j)] = cr(1.0);
                let mapped = phi.apply_mat(&unit);
                let mut marker = CMat::zeros(d, d);
                marker[(i, j)] = cr(1.0);
                choi += kron(&mapped, &marker);
            }
        }
        choi /= cr(d as f64);
        assert!(max_abs(&(out.matrix() - &choi)) < 1e-10);
    }

    #[test]
    fn trace_monotonicity_of_operations() {
        for seed in 0..20 {
            let mut rng = substream(3500 + seed, 0);
            let chan = random_channel(100 + seed, 2, 2, 2);
            let scale: Vec<f64> = (0..2).map(|_| 0.3 + 0.6 * rand::Rng::random::<f64>(&mut rng)).collect();
            let contraction = CMat::from_fn(2, 2, |i, j| if i == j { cr(scale[i]) } else { cr(0.0) });
            let kraus: Vec<CMat> = chan.kraus().iter().map(|k| k * &contraction).collect();
            let op = QuantumOperation::new(2, 2, kraus).unwrap();
            assert!(!op.is_channel());
            let rho = random_state(80 + seed, 2);
            let out = op.apply(&rho).unwrap();
            assert!(out.trace() <= rho.trace() + 1e-10);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let phi = random_channel(16, 2, 2, 2);
        let rho = random_state(90, 3);
        assert!(phi.apply(&rho).is_err());
        let psi = random_channel(17, 3, 2, 2);
        assert!(common_stinespring(&phi, &psi, 0).is_err());
    }
}
