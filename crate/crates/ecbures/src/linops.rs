//! Dense complex linear algebra: operator predicates and factorizations.
//!
//! Everything here works on `nalgebra` dense matrices over `Complex<f64>`.
//! The wrapper types ([`HermitianOperator`], [`PositiveOperator`]) validate
//! their invariants on construction; the factorizations ([`eigh`], [`polar`])
//! apply deterministic ordering and phase conventions so that identical
//! input bits always produce identical output bits.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::tol;
use crate::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Largest entry modulus; zero for empty matrices.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Hermitian part (M + M†)/2.
pub fn herm_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * cr(0.5)
}

/// Operator (spectral) norm via singular values.
pub fn op_norm(m: &CMat) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

/// Frobenius inner-product trace Tr(A†B) is not needed; plain trace is.
pub fn trace(m: &CMat) -> Complex64 {
    m.trace()
}

/// Classification labels for [`classify_contraction`], ordered weakest to
/// strongest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ContractionClass {
    General,
    Contraction,
    PartialIsometry,
    Isometry,
    Unitary,
}

/// A square matrix certified Hermitian within [`tol::HERMITICITY_REL`].
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    mat: CMat,
}

impl HermitianOperator {
    /// Validates hermiticity and symmetrizes the stored matrix.
    pub fn new(mat: CMat) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::InvalidInput(format!(
                "hermitian operator must be square and nonempty, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let scale = max_abs(&mat).max(1.0);
        let dev = max_abs(&(&mat - mat.adjoint()));
        if dev > tol::HERMITICITY_REL * scale {
            return Err(Error::InvalidInput(format!(
                "not Hermitian: ‖M − M†‖_max = {dev:.3e} exceeds tolerance"
            )));
        }
        Ok(Self {
            mat: herm_part(&mat),
        })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }
}

/// A positive semidefinite operator. Construction clips eigenvalues in
/// [−1e-10·‖M‖, 0) to zero and rejects anything more negative, so the stored
/// matrix is exactly PSD up to rounding of the reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveOperator {
    mat: CMat,
    trace: f64,
}

impl PositiveOperator {
    pub fn new(mat: CMat) -> Result<Self> {
        let herm = HermitianOperator::new(mat)?;
        let decomp = eigh(&herm);
        let lambda_max = decomp
            .eigenvalues
            .iter()
            .map(|x| x.abs())
            .fold(0.0, f64::max);
        let clip = tol::PSD_CLIP_REL * lambda_max.max(1e-300);
        let min = decomp.eigenvalues.last().copied().unwrap_or(0.0);
        if min < -clip {
            return Err(Error::InvalidInput(format!(
                "not PSD: min eigenvalue {min:.3e} below clip threshold {:.3e}",
                -clip
            )));
        }
        let clipped: Vec<f64> = decomp
            .eigenvalues
            .iter()
            .map(|&x| if x < 0.0 { 0.0 } else { x })
            .collect();
        let mat = decomp.reconstruct_with(&clipped);
        let trace = mat.trace().re;
        Ok(Self { mat, trace })
    }

    /// Construction for matrices already known PSD by construction
    /// (operation outputs, reconstructed mixtures). Still symmetrizes, but
    /// skips the eigendecomposition; negative rounding noise is tolerated by
    /// downstream clipping.
    pub(crate) fn from_psd_unchecked(mat: CMat) -> Self {
        let mat = herm_part(&mat);
        let trace = mat.trace().re;
        Self { mat, trace }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn trace(&self) -> f64 {
        self.trace
    }

    pub fn is_unit_trace(&self) -> bool {
        (self.trace - 1.0).abs() <= 1e-9 * self.trace.abs().max(1.0)
    }

    pub fn as_hermitian(&self) -> HermitianOperator {
        HermitianOperator {
            mat: self.mat.clone(),
        }
    }
}

/// Eigendecomposition of a Hermitian operator.
///
/// Eigenvalues are sorted descending. Ties (bit-equal eigenvalues) are
/// broken by the ascending index of the first nonzero eigenvector component,
/// and each eigenvector is normalized so that its first component of
/// non-negligible modulus is real and positive.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in eigenvalue order.
    pub eigenvectors: CMat,
}

impl EigenDecomposition {
    /// QΛQ† with the stored eigenvalues.
    pub fn reconstruct(&self) -> CMat {
        self.reconstruct_with(&self.eigenvalues)
    }

    /// QΛ'Q† with substituted eigenvalues (clipping, square roots).
    pub fn reconstruct_with(&self, eigenvalues: &[f64]) -> CMat {
        let q = &self.eigenvectors;
        let mut scaled = q.clone();
        for (j, &lambda) in eigenvalues.iter().enumerate() {
            scaled.column_mut(j).scale_mut(lambda);
        }
        &scaled * q.adjoint()
    }
}

fn first_significant_index(col: &CVec) -> usize {
    let peak = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let cut = 1e-12 * peak.max(1e-300);
    col.iter().position(|z| z.norm() > cut).unwrap_or(0)
}

/// Hermitian eigendecomposition with the deterministic conventions above.
pub fn eigh(m: &HermitianOperator) -> EigenDecomposition {
    let n = m.dim();
    let se = m.matrix().clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    let firsts: Vec<usize> = (0..n)
        .map(|j| first_significant_index(&se.eigenvectors.column(j).clone_owned()))
        .collect();
    order.sort_by(|&a, &b| {
        se.eigenvalues[b]
            .partial_cmp(&se.eigenvalues[a])
            .unwrap()
            .then(firsts[a].cmp(&firsts[b]))
    });

    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = CMat::zeros(n, n);
    for (slot, &j) in order.iter().enumerate() {
        eigenvalues.push(se.eigenvalues[j]);
        let mut col = se.eigenvectors.column(j).clone_owned();
        let k = firsts[j];
        let z = col[k];
        if z.norm() > 0.0 {
            let phase = z.conj() / z.norm();
            col *= phase;
        }
        eigenvectors.set_column(slot, &col);
    }
    EigenDecomposition {
        eigenvalues,
        eigenvectors,
    }
}

/// Principal square root of a PSD operator: R with R² = P.
pub fn psd_sqrt(p: &PositiveOperator) -> Result<PositiveOperator> {
    let decomp = eigh(&p.as_hermitian());
    let lambda_max = decomp
        .eigenvalues
        .iter()
        .map(|x| x.abs())
        .fold(0.0, f64::max);
    let clip = tol::PSD_CLIP_REL * lambda_max.max(1e-300);
    let noise = tol::SPECTRAL_NOISE_REL * lambda_max.max(0.0);
    let mut roots = Vec::with_capacity(decomp.eigenvalues.len());
    for &lambda in &decomp.eigenvalues {
        if lambda < -clip {
            return Err(Error::InvalidInput(format!(
                "psd_sqrt: eigenvalue {lambda:.3e} below tolerance"
            )));
        }
        roots.push(if lambda > noise { lambda.sqrt() } else { 0.0 });
    }
    Ok(PositiveOperator::from_psd_unchecked(
        decomp.reconstruct_with(&roots),
    ))
}

/// Sum of singular values.
pub fn trace_norm(x: &CMat) -> f64 {
    x.clone().svd(false, false).singular_values.iter().sum()
}

/// Polar decomposition X = W·P with P = √(X†X) PSD and W a partial isometry
/// whose initial space is the support of P (singular values below
/// 1e-12·σ_max are treated as zero).
pub fn polar(x: &CMat) -> (CMat, PositiveOperator) {
    let svd = x.clone().svd(true, true);
    let u = svd.u.expect("svd requested u");
    let v_t = svd.v_t.expect("svd requested v_t");
    let s = &svd.singular_values;
    let cut = 1e-12 * s.max().max(1e-300);

    // W = U_masked V†, P = V Σ V†
    let mut u_masked = u;
    for (j, &sv) in s.iter().enumerate() {
        if sv <= cut {
            u_masked.column_mut(j).fill(cr(0.0));
        }
    }
    let w = &u_masked * &v_t;

    let v = v_t.adjoint();
    let mut v_scaled = v.clone();
    for (j, &sv) in s.iter().enumerate() {
        v_scaled.column_mut(j).scale_mut(sv.max(0.0));
    }
    let p = PositiveOperator::from_psd_unchecked(&v_scaled * v.adjoint());
    (w, p)
}

/// Which tensor factor [`partial_trace`] sums over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    First,
    Second,
}

/// Partial trace of an arbitrary matrix on a bipartite space with the first
/// factor of dimension `d_first` and the second of dimension `d_second`
/// (index layout: row = x·d_second + y).
pub fn partial_trace_mat(m: &CMat, d_first: usize, d_second: usize, over: Factor) -> Result<CMat> {
    let d = d_first * d_second;
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::InvalidInput(format!(
            "partial trace: matrix is {}x{}, expected {d}x{d} = {d_first}⊗{d_second}",
            m.nrows(),
            m.ncols()
        )));
    }
    match over {
        Factor::Second => {
            let mut out = CMat::zeros(d_first, d_first);
            for x in 0..d_first {
                for xp in 0..d_first {
                    let mut acc = cr(0.0);
                    for y in 0..d_second {
                        acc += m[(x * d_second + y, xp * d_second + y)];
                    }
                    out[(x, xp)] = acc;
                }
            }
            Ok(out)
        }
        Factor::First => {
            let mut out = CMat::zeros(d_second, d_second);
            for y in 0..d_second {
                for yp in 0..d_second {
                    let mut acc = cr(0.0);
                    for x in 0..d_first {
                        acc += m[(x * d_second + y, x * d_second + yp)];
                    }
                    out[(y, yp)] = acc;
                }
            }
            Ok(out)
        }
    }
}

/// Trace-preserving partial trace of a positive operator.
pub fn partial_trace(
    p: &PositiveOperator,
    d_first: usize,
    d_second: usize,
    over: Factor,
) -> Result<PositiveOperator> {
    let reduced = partial_trace_mat(p.matrix(), d_first, d_second, over)?;
    Ok(PositiveOperator::from_psd_unchecked(reduced))
}

/// Orthogonal projector onto the span of eigenvectors with eigenvalue
/// exceeding `rank_tol · λ_max`.
pub fn support_projector(p: &PositiveOperator, rank_tol: f64) -> HermitianOperator {
    let decomp = eigh(&p.as_hermitian());
    let lambda_max = decomp.eigenvalues.first().copied().unwrap_or(0.0);
    let cut = rank_tol * lambda_max.max(0.0);
    let indicator: Vec<f64> = decomp
        .eigenvalues
        .iter()
        .map(|&x| if lambda_max > 0.0 && x > cut { 1.0 } else { 0.0 })
        .collect();
    HermitianOperator {
        mat: herm_part(&decomp.reconstruct_with(&indicator)),
    }
}

/// Rank of the support at the given relative cutoff.
pub fn support_rank(p: &PositiveOperator, rank_tol: f64) -> usize {
    let decomp = eigh(&p.as_hermitian());
    let lambda_max = decomp.eigenvalues.first().copied().unwrap_or(0.0);
    if lambda_max <= 0.0 {
        return 0;
    }
    decomp
        .eigenvalues
        .iter()
        .filter(|&&x| x > rank_tol * lambda_max)
        .count()
}

/// Strongest label whose defining predicate holds within `tol` (max-entry
/// residuals): ‖X‖ ≤ 1+tol → contraction; X†X idempotent → partial isometry;
/// X†X = I → isometry; additionally XX† = I → unitary.
pub fn classify_contraction(x: &CMat, tolerance: f64) -> ContractionClass {
    if op_norm(x) > 1.0 + tolerance {
        return ContractionClass::General;
    }
    let g = x.adjoint() * x;
    let idempotent = max_abs(&(&g * &g - &g)) <= tolerance;
    if !idempotent {
        return ContractionClass::Contraction;
    }
    let eye_in = CMat::identity(x.ncols(), x.ncols());
    if max_abs(&(&g - &eye_in)) > tolerance {
        return ContractionClass::PartialIsometry;
    }
    if x.nrows() == x.ncols() {
        let gg = x * x.adjoint();
        let eye_out = CMat::identity(x.nrows(), x.nrows());
        if max_abs(&(&gg - &eye_out)) <= tolerance {
            return ContractionClass::Unitary;
        }
    }
    ContractionClass::Isometry
}

/// Kronecker product convenience (row-major, first factor outermost).
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::rng::{gaussian_cmat, substream};
    use proptest::prelude::*;

    fn pauli_x() -> CMat {
        CMat::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)])
    }

    fn diag(entries: &[f64]) -> CMat {
        let n = entries.len();
        CMat::from_fn(n, n, |i, j| if i == j { cr(entries[i]) } else { cr(0.0) })
    }

    #[test]
    fn eigh_diagonal_sorts_descending() {
        let h = HermitianOperator::new(diag(&[1.0, 2.0])).unwrap();
        let d = eigh(&h);
        assert_eq!(d.eigenvalues, vec![2.0, 1.0]);
    }

    #[test]
    fn eigh_identity_has_unit_spectrum() {
        let h = HermitianOperator::new(CMat::identity(3, 3)).unwrap();
        let d = eigh(&h);
        for lambda in &d.eigenvalues {
            assert!((lambda - 1.0).abs() < 1e-12);
        }
        let ortho = d.eigenvectors.adjoint() * &d.eigenvectors;
        assert!(max_abs(&(&ortho - CMat::identity(3, 3))) < 1e-12);
    }

    #[test]
    fn eigh_pauli_x() {
        let h = HermitianOperator::new(pauli_x()).unwrap();
        let d = eigh(&h);
        assert!((d.eigenvalues[0] - 1.0).abs() < 1e-12);
        assert!((d.eigenvalues[1] + 1.0).abs() < 1e-12);
        let s = 1.0 / 2.0_f64.sqrt();
        let plus = d.eigenvectors.column(0);
        let minus = d.eigenvectors.column(1);
        assert!((plus[0] - cr(s)).norm() < 1e-12);
        assert!((plus[1] - cr(s)).norm() < 1e-12);
        assert!((minus[0] - cr(s)).norm() < 1e-12);
        assert!((minus[1] + cr(s)).norm() < 1e-12);
    }

    #[test]
    fn eigh_is_bit_deterministic() {
        let mut rng = substream(11, 0);
        let a = gaussian_cmat(&mut rng, 6, 6);
        let h = HermitianOperator::new(herm_part(&a)).unwrap();
        let d1 = eigh(&h);
        let d2 = eigh(&h);
        assert_eq!(d1.eigenvalues, d2.eigenvalues);
        assert_eq!(d1.eigenvectors, d2.eigenvectors);
    }

    #[test]
    fn eigh_reconstruction_accuracy() {
        for seed in 0..20 {
            let mut rng = substream(12, seed);
            let a = gaussian_cmat(&mut rng, 5, 5);
            let h = HermitianOperator::new(herm_part(&a)).unwrap();
            let d = eigh(&h);
            let err = max_abs(&(d.reconstruct() - h.matrix()));
            assert!(err <= 1e-10 * max_abs(h.matrix()).max(1.0));
        }
    }

    #[test]
    fn psd_sqrt_diagonal() {
        let p = PositiveOperator::new(diag(&[4.0, 9.0])).unwrap();
        let r = psd_sqrt(&p).unwrap();
        assert!(max_abs(&(r.matrix() - diag(&[2.0, 3.0]))) < 1e-12);
    }

    #[test]
    fn psd_sqrt_zero() {
        let p = PositiveOperator::new(CMat::zeros(3, 3)).unwrap();
        let r = psd_sqrt(&p).unwrap();
        assert_eq!(max_abs(r.matrix()), 0.0);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        // Squaring-check oracle on random PSD 3x3.
        for seed in 0..20 {
            let mut rng = substream(13, seed);
            let a = gaussian_cmat(&mut rng, 3, 3);
            let p = PositiveOperator::new(a.adjoint() * &a).unwrap();
            let r = psd_sqrt(&p).unwrap();
            let err = max_abs(&(r.matrix() * r.matrix() - p.matrix()));
            assert!(err <= 1e-9 * max_abs(p.matrix()).max(1e-12));
        }
    }

    #[test]
    fn trace_norm_examples() {
        assert!((trace_norm(&diag(&[1.0, -2.0])) - 3.0).abs() < 1e-12);
        assert_eq!(trace_norm(&CMat::zeros(2, 3)), 0.0);
    }

    #[test]
    fn trace_norm_rank_one() {
        // |u⟩⟨v| with unit u, v has trace norm 1; oracle: eigenvalues of X†X.
        let mut rng = substream(14, 0);
        let mut u = gaussian_cmat(&mut rng, 4, 1);
        let mut v = gaussian_cmat(&mut rng, 4, 1);
        u /= cr(u.norm());
        v /= cr(v.norm());
        let x = &u * v.adjoint();
        assert!((trace_norm(&x) - 1.0).abs() < 1e-10);
        let g = HermitianOperator::new(x.adjoint() * &x).unwrap();
        let oracle: f64 = eigh(&g)
            .eigenvalues
            .iter()
            .map(|&l| l.max(0.0).sqrt())
            .sum();
        assert!((trace_norm(&x) - oracle).abs() < 1e-8);
    }

    #[test]
    fn polar_of_unitary_is_identity_part() {
        let s = 1.0 / 2.0_f64.sqrt();
        let had = CMat::from_row_slice(2, 2, &[cr(s), cr(s), cr(s), cr(-s)]);
        let (w, p) = polar(&had);
        assert!(max_abs(&(&w - &had)) < 1e-12);
        assert!(max_abs(&(p.matrix() - CMat::identity(2, 2))) < 1e-12);
    }

    #[test]
    fn polar_of_rank_deficient_diagonal() {
        let x = diag(&[2.0, 0.0]);
        let (w, p) = polar(&x);
        assert!(max_abs(&(&w - diag(&[1.0, 0.0]))) < 1e-12);
        assert!(max_abs(&(p.matrix() - &x)) < 1e-12);
    }

    #[test]
    fn polar_reconstructs_random_matrices() {
        for seed in 0..100 {
            let mut rng = substream(15, seed);
            let rows = 2 + (seed as usize % 15);
            let cols = 2 + ((seed as usize / 3) % 15);
            let x = gaussian_cmat(&mut rng, rows, cols);
            let (w, p) = polar(&x);
            let err = max_abs(&(&w * p.matrix() - &x));
            assert!(err <= 1e-9 * max_abs(&x).max(1e-12), "err {err}");
            // W†W is the support projector of P.
            let g = w.adjoint() * &w;
            assert!(max_abs(&(&g * &g - &g)) < 1e-9);
            let supp = support_projector(&p, 1e-10).into_matrix();
            assert!(max_abs(&(&g - &supp)) < 1e-9);
        }
    }

    #[test]
    fn partial_trace_product_state() {
        let mut rng = substream(16, 0);
        let a = gaussian_cmat(&mut rng, 2, 2);
        let b = gaussian_cmat(&mut rng, 3, 3);
        let rho = PositiveOperator::new((a.adjoint() * &a) / cr((a.adjoint() * &a).trace().re))
            .unwrap();
        let sig = PositiveOperator::new((b.adjoint() * &b) / cr((b.adjoint() * &b).trace().re))
            .unwrap();
        let prod = PositiveOperator::new(kron(rho.matrix(), sig.matrix())).unwrap();
        let red = partial_trace(&prod, 2, 3, Factor::Second).unwrap();
        assert!(max_abs(&(red.matrix() - rho.matrix())) < 1e-12);
    }

    #[test]
    fn partial_trace_maximally_entangled() {
        let s = cr(1.0 / 2.0_f64.sqrt());
        let mut psi = CVec::zeros(4);
        psi[0] = s;
        psi[3] = s;
        let rho = PositiveOperator::new(&psi * psi.adjoint()).unwrap();
        let red = partial_trace(&rho, 2, 2, Factor::Second).unwrap();
        assert!(max_abs(&(red.matrix() - diag(&[0.5, 0.5]))) < 1e-12);
    }

    #[test]
    fn partial_trace_matches_naive_loop() {
        // Index-summation oracle on a random 2⊗3 PSD matrix.
        let mut rng = substream(17, 0);
        let a = gaussian_cmat(&mut rng, 6, 6);
        let p = PositiveOperator::new(a.adjoint() * &a).unwrap();
        let m = p.matrix();

        let mut naive = CMat::zeros(2, 2);
        for x in 0..2 {
            for xp in 0..2 {
                for y in 0..3 {
                    naive[(x, xp)] += m[(x * 3 + y, xp * 3 + y)];
                }
            }
        }
        let red = partial_trace(&p, 2, 3, Factor::Second).unwrap();
        assert!(max_abs(&(red.matrix() - &naive)) < 1e-12);

        let mut naive2 = CMat::zeros(3, 3);
        for y in 0..3 {
            for yp in 0..3 {
                for x in 0..2 {
                    naive2[(y, yp)] += m[(x * 3 + y, x * 3 + yp)];
                }
            }
        }
        let red2 = partial_trace(&p, 2, 3, Factor::First).unwrap();
        assert!(max_abs(&(red2.matrix() - &naive2)) < 1e-12);
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        let p = PositiveOperator::new(CMat::identity(4, 4)).unwrap();
        assert!(partial_trace(&p, 3, 2, Factor::First).is_err());
    }

    #[test]
    fn support_projector_examples() {
        let p = PositiveOperator::new(diag(&[1.0, 0.0])).unwrap();
        let proj = support_projector(&p, tol::DEFAULT_RANK_TOL);
        assert!(max_abs(&(proj.matrix() - diag(&[1.0, 0.0]))) < 1e-12);

        let full = PositiveOperator::new(diag(&[0.3, 0.5, 0.2])).unwrap();
        let proj = support_projector(&full, tol::DEFAULT_RANK_TOL);
        assert!(max_abs(&(proj.matrix() - CMat::identity(3, 3))) < 1e-10);
    }

    #[test]
    fn support_projector_rank_two() {
        let mut rng = substream(18, 0);
        let a = gaussian_cmat(&mut rng, 2, 4);
        let p = PositiveOperator::new(a.adjoint() * &a).unwrap();
        assert_eq!(support_rank(&p, tol::DEFAULT_RANK_TOL), 2);
        let proj = support_projector(&p, tol::DEFAULT_RANK_TOL).into_matrix();
        assert!((proj.trace().re - 2.0).abs() < 1e-9);
        // Projector fixes P: QP = P.
        assert!(max_abs(&(&proj * p.matrix() - p.matrix())) < 1e-8 * max_abs(p.matrix()));
    }

    #[test]
    fn support_projector_fixes_low_rank_operators() {
        for seed in 0..100 {
            let mut rng = substream(19, seed);
            let d = 3 + (seed as usize % 5);
            let r = 1 + (seed as usize % d.min(3));
            let a = gaussian_cmat(&mut rng, r, d);
            let p = PositiveOperator::new(a.adjoint() * &a).unwrap();
            let proj = support_projector(&p, tol::DEFAULT_RANK_TOL).into_matrix();
            let err = max_abs(&(&proj * p.matrix() - p.matrix()));
            assert!(err <= 1e-8 * max_abs(p.matrix()).max(1e-12));
            let idem = max_abs(&(&proj * &proj - &proj));
            assert!(idem < 1e-10);
        }
    }

    #[test]
    fn classification_ladder() {
        let t = 1e-9;
        assert_eq!(
            classify_contraction(&CMat::identity(2, 2), t),
            ContractionClass::Unitary
        );
        assert_eq!(
            classify_contraction(&diag(&[1.0, 0.0]), t),
            ContractionClass::PartialIsometry
        );
        assert_eq!(
            classify_contraction(&diag(&[0.5, 0.5]), t),
            ContractionClass::Contraction
        );
        assert_eq!(
            classify_contraction(&diag(&[2.0, 0.5]), t),
            ContractionClass::General
        );
        // Tall isometry.
        let mut v = CMat::zeros(3, 2);
        v[(0, 0)] = cr(1.0);
        v[(1, 1)] = cr(1.0);
        assert_eq!(classify_contraction(&v, t), ContractionClass::Isometry);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = CMat::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(0.0), cr(0.0)]);
        assert!(HermitianOperator::new(m).is_err());
    }

    #[test]
    fn rejects_genuinely_negative() {
        assert!(PositiveOperator::new(diag(&[1.0, -0.5])).is_err());
    }

    #[test]
    fn clips_negative_noise() {
        let p = PositiveOperator::new(diag(&[1.0, -1e-12])).unwrap();
        let d = eigh(&p.as_hermitian());
        assert!(d.eigenvalues.iter().all(|&l| l >= -1e-15));
    }

    proptest! {
        #[test]
        fn trace_norm_of_psd_equals_trace(seed in 0u64..200) {
            let mut rng = substream(20, seed);
            let d = 2 + (seed as usize % 6);
            let a = gaussian_cmat(&mut rng, d, d);
            let p = PositiveOperator::new(a.adjoint() * &a).unwrap();
            let tn = trace_norm(p.matrix());
            prop_assert!((tn - p.trace()).abs() <= 1e-10 * p.trace().max(1e-12));
        }

        #[test]
        fn partial_trace_preserves_trace(seed in 0u64..100) {
            let mut rng = substream(21, seed);
            let (dx, dy) = (2 + (seed as usize % 3), 2 + ((seed as usize / 3) % 3));
            let a = gaussian_cmat(&mut rng, dx * dy, dx * dy);
            let p = PositiveOperator::new(a.adjoint() * &a).unwrap();
            let red = partial_trace(&p, dx, dy, Factor::Second).unwrap();
            prop_assert!((red.trace() - p.trace()).abs() <= 1e-10 * p.trace().max(1.0));
        }
    }
}
