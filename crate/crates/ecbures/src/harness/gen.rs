//! Seeded instance generation: channels, operations, Hamiltonians, states.

use serde::{Deserialize, Serialize};

use crate::enorm::Hamiltonian;
use crate::harness::rng::{gaussian_cmat, random_unit_vector, substream};
use crate::linops::{cr, CMat, PositiveOperator};
use crate::quantum::QuantumOperation;
use crate::{Error, Result};
use rand::Rng;

/// What kind of operation to generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceKind {
    RandomChannel,
    RandomOperation,
    /// The qubit phase-flip unitary Z (full dephasing of coherences under
    /// the worst case), the analytic benchmark instance.
    Dephasing,
    /// (1−q)ρ + q(Trρ)·I/d with q from `param` (default 0.5).
    Depolarizing,
    /// ρ ↦ (Trρ)·|s⟩⟨s| with a seeded Haar-random pure target.
    PrepareState,
    FromFile,
}

/// Description of a generated instance; serialized into reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub kind: InstanceKind,
    pub d_a: usize,
    pub d_b: usize,
    pub kraus_count: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<f64>,
}

/// Haar-style random channel: orthonormalize a seeded Gaussian
/// (d_B·k)×d_A matrix into an isometry and slice it into k Kraus blocks.
pub fn gen_random_channel(spec: &InstanceSpec) -> Result<QuantumOperation> {
    let (d_a, d_b, k) = (spec.d_a, spec.d_b, spec.kraus_count);
    if k * d_b < d_a {
        return Err(Error::InvalidInput(format!(
            "no isometry into {k}·{d_b} < {d_a} dimensions"
        )));
    }
    let mut rng = substream(spec.seed, 0);
    let g = gaussian_cmat(&mut rng, d_b * k, d_a);
    let q = g.qr().q();
    let kraus: Vec<CMat> = (0..k)
        .map(|i| q.view_range(i * d_b..(i + 1) * d_b, 0..d_a).clone_owned())
        .collect();
    QuantumOperation::new(d_a, d_b, kraus)
}

/// Random trace-decreasing operation: a random channel composed with a
/// seeded diagonal contraction on the input (strictly below the identity).
pub fn gen_random_operation(spec: &InstanceSpec) -> Result<QuantumOperation> {
    let channel = gen_random_channel(spec)?;
    let mut rng = substream(spec.seed, 1);
    let scales: Vec<f64> = (0..spec.d_a)
        .map(|_| rng.random_range(0.2..0.95))
        .collect();
    let contraction = CMat::from_fn(spec.d_a, spec.d_a, |i, j| {
        if i == j {
            cr(scales[i])
        } else {
            cr(0.0)
        }
    });
    let kraus: Vec<CMat> = channel.kraus().iter().map(|k| k * &contraction).collect();
    QuantumOperation::new(spec.d_a, spec.d_b, kraus)
}

/// The qubit phase-flip unitary channel.
pub fn dephasing_channel() -> QuantumOperation {
    let z = CMat::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(-1.0)]);
    QuantumOperation::from_single_kraus(z).expect("unitary Kraus")
}

/// Depolarizing channel (1−q)ρ + q(Trρ)·I/d on a d-dimensional space.
pub fn depolarizing_channel(d: usize, q: f64) -> Result<QuantumOperation> {
    let mixed = PositiveOperator::new(CMat::identity(d, d) / cr(d as f64))?;
    crate::quantum::depolarize_operation(&QuantumOperation::identity(d), q, &mixed)
}

/// Preparation channel ρ ↦ (Trρ)·|s⟩⟨s| for a fixed target vector.
pub fn prepare_state_channel(d_in: usize, target: &crate::linops::CVec) -> Result<QuantumOperation> {
    let d_out = target.len();
    let kraus: Vec<CMat> = (0..d_in)
        .map(|m| {
            let mut k = CMat::zeros(d_out, d_in);
            for r in 0..d_out {
                k[(r, m)] = target[r];
            }
            k
        })
        .collect();
    QuantumOperation::new(d_in, d_out, kraus)
}

/// Dispatches on the instance kind (except `FromFile`, which the CLI reads
/// from disk).
pub fn gen_operation(spec: &InstanceSpec) -> Result<QuantumOperation> {
    match spec.kind {
        InstanceKind::RandomChannel => gen_random_channel(spec),
        InstanceKind::RandomOperation => gen_random_operation(spec),
        InstanceKind::Dephasing => Ok(dephasing_channel()),
        InstanceKind::Depolarizing => depolarizing_channel(spec.d_a, spec.param.unwrap_or(0.5)),
        InstanceKind::PrepareState => {
            let mut rng = substream(spec.seed, 2);
            let target = random_unit_vector(&mut rng, spec.d_b);
            prepare_state_channel(spec.d_a, &target)
        }
        InstanceKind::FromFile => Err(Error::InvalidInput(
            "from-file instances are resolved by the CLI".into(),
        )),
    }
}

/// Level-spacing conventions for generated Hamiltonians.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    /// 0, 1, 2, …
    Linear,
    /// Oscillator-style k + 1/2 in units ħω = 1.
    Harmonic,
    /// Explicit nonnegative eigenvalues (sorted ascending).
    Custom(Vec<f64>),
}

/// Hamiltonian with the requested spectrum in the computational basis.
pub fn gen_hamiltonian(dim: usize, spacing: &Spacing) -> Result<Hamiltonian> {
    if dim < 2 {
        return Err(Error::InvalidInput("Hamiltonian needs dim ≥ 2".into()));
    }
    let eigenvalues: Vec<f64> = match spacing {
        Spacing::Linear => (0..dim).map(|k| k as f64).collect(),
        Spacing::Harmonic => (0..dim).map(|k| k as f64 + 0.5).collect(),
        Spacing::Custom(list) => {
            if list.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "custom spectrum has {} levels, expected {dim}",
                    list.len()
                )));
            }
            if list.iter().any(|e| *e < 0.0) {
                return Err(Error::InvalidInput(
                    "custom eigenvalues must be nonnegative".into(),
                ));
            }
            let mut sorted = list.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            sorted
        }
    };
    Hamiltonian::from_diagonal(eigenvalues)
}

/// Seeded random state of the given rank (unit trace).
pub fn gen_state(dim: usize, rank: usize, seed: u64) -> Result<PositiveOperator> {
    let mut rng = substream(seed, 3);
    PositiveOperator::new(crate::harness::rng::random_density(&mut rng, dim, rank))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::max_abs;

    fn spec(kind: InstanceKind, d_a: usize, d_b: usize, k: usize, seed: u64) -> InstanceSpec {
        InstanceSpec {
            kind,
            d_a,
            d_b,
            kraus_count: k,
            seed,
            param: None,
        }
    }

    #[test]
    fn random_channel_is_exactly_complete() {
        let op = gen_random_channel(&spec(InstanceKind::RandomChannel, 2, 2, 4, 11)).unwrap();
        let mut gram = CMat::zeros(2, 2);
        for k in op.kraus() {
            gram += k.adjoint() * k;
        }
        assert!(max_abs(&(&gram - CMat::identity(2, 2))) < 1e-12);
        assert!(op.is_channel());
    }

    #[test]
    fn single_kraus_channel_is_unitary() {
        let op = gen_random_channel(&spec(InstanceKind::RandomChannel, 2, 2, 1, 3)).unwrap();
        assert_eq!(op.kraus_count(), 1);
        assert_eq!(
            crate::linops::classify_contraction(&op.kraus()[0], 1e-9),
            crate::linops::ContractionClass::Unitary
        );
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let s = spec(InstanceKind::RandomChannel, 3, 2, 2, 42);
        let a = gen_random_channel(&s).unwrap();
        let b = gen_random_channel(&s).unwrap();
        for (ka, kb) in a.kraus().iter().zip(b.kraus()) {
            assert_eq!(ka, kb);
        }
    }

    #[test]
    fn infeasible_dims_are_rejected() {
        assert!(gen_random_channel(&spec(InstanceKind::RandomChannel, 3, 2, 1, 0)).is_err());
    }

    #[test]
    fn random_operation_strictly_decreases_trace() {
        let op = gen_random_operation(&spec(InstanceKind::RandomOperation, 2, 2, 2, 5)).unwrap();
        assert!(!op.is_channel());
        // Witness state: the completeness defect I − ΣK†K has a positive
        // top eigenvector.
        let mut gram = CMat::zeros(2, 2);
        for k in op.kraus() {
            gram += k.adjoint() * k;
        }
        let defect = CMat::identity(2, 2) - &gram;
        let top = crate::linops::eigh(
            &crate::linops::HermitianOperator::new(crate::linops::herm_part(&defect)).unwrap(),
        );
        assert!(top.eigenvalues[0] > 1e-3);
        let v = top.eigenvectors.column(0).clone_owned();
        let rho = PositiveOperator::new(&v * v.adjoint()).unwrap();
        let out = op.apply(&rho).unwrap();
        assert!(out.trace() < 1.0 - 1e-3);
    }

    #[test]
    fn hamiltonian_spacings() {
        let lin = gen_hamiltonian(3, &Spacing::Linear).unwrap();
        assert_eq!(lin.eigenvalues(), &[0.0, 1.0, 2.0]);
        let har = gen_hamiltonian(3, &Spacing::Harmonic).unwrap();
        assert_eq!(har.eigenvalues(), &[0.5, 1.5, 2.5]);
        let custom = gen_hamiltonian(3, &Spacing::Custom(vec![0.0, 0.5, 0.5])).unwrap();
        assert_eq!(custom.eigenvalues(), &[0.0, 0.5, 0.5]);
        assert!(gen_hamiltonian(2, &Spacing::Custom(vec![-1.0, 0.0])).is_err());
    }

    #[test]
    fn named_instances_have_expected_shape() {
        let dep = depolarizing_channel(2, 0.5).unwrap();
        assert!(dep.is_channel());
        let z = dephasing_channel();
        assert_eq!(z.kraus_count(), 1);
        let prep = gen_operation(&spec(InstanceKind::PrepareState, 2, 2, 1, 9)).unwrap();
        assert!(prep.is_channel());
        let rho = gen_state(2, 2, 4).unwrap();
        let out = prep.apply(&rho).unwrap();
        // Output is rank one regardless of the input.
        assert_eq!(crate::linops::support_rank(&out, 1e-8), 1);
    }
}
