//! Reproducible randomness.
//!
//! Every trial draws from its own ChaCha12 stream whose 256-bit key is
//! derived from `(seed, trial_index)` through a splitmix64 chain. Results
//! are therefore independent of execution order and thread count, and a
//! report carries a single master seed.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linops::{c, cr, CMat, CVec};

/// Identifier of the substream scheme, echoed into reports.
pub const GENERATOR_NAME: &str = "chacha12/splitmix64(seed,trial)";

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent substream for trial `index` under master `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha12Rng {
    let mut state = seed ^ index.wrapping_mul(0xA076_1D64_78BD_642F);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}

/// Standard complex Gaussian (unit variance per complex entry).
pub fn complex_gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix of iid standard complex Gaussians, filled column-major.
pub fn gaussian_cmat<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    let mut m = CMat::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = complex_gaussian(rng);
        }
    }
    m
}

/// Haar-distributed random unit vector.
pub fn random_unit_vector<R: Rng>(rng: &mut R, dim: usize) -> CVec {
    loop {
        let mut v = DVector::from_fn(dim, |_, _| complex_gaussian(rng));
        let n = v.norm();
        if n > 1e-6 {
            v /= cr(n);
            return v;
        }
    }
}

/// Random density matrix of the given rank (Wishart, trace-normalized).
pub fn random_density<R: Rng>(rng: &mut R, dim: usize, rank: usize) -> CMat {
    let a = gaussian_cmat(rng, dim, rank.max(1));
    let w = &a * a.adjoint();
    let tr = w.trace().re;
    w / cr(tr)
}

/// Random PSD operator with trace uniform in `[lo, hi]` (subnormalized
/// operators are exercised by picking `lo < 1`).
pub fn random_psd_with_trace<R: Rng>(
    rng: &mut R,
    dim: usize,
    rank: usize,
    lo: f64,
    hi: f64,
) -> CMat {
    let target: f64 = rng.random_range(lo..hi);
    random_density(rng, dim, rank) * cr(target)
}

/// Random operator in the operator-norm unit ball (norm uniform in [0,1]).
pub fn random_contraction<R: Rng>(rng: &mut R, dim: usize) -> CMat {
    let g = gaussian_cmat(rng, dim, dim);
    let norm = crate::linops::op_norm(&g);
    let target: f64 = rng.random();
    if norm > 0.0 {
        g * cr(target / norm)
    } else {
        g
    }
}
