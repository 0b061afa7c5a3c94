//! JSON schema for all exchanged objects.
//!
//! Complex scalars are `[re, im]` pairs; matrices are row-major nested
//! arrays of pairs; vectors are flat arrays of pairs. An operation is
//! `{"kind": "kraus", "d_in", "d_out", "kraus": [matrix, …]}`, a Hamiltonian
//! is `{"eigenvalues": […], "basis": matrix?}` (absent basis means the
//! computational one). Numbers round-trip through serde_json's
//! shortest-representation decimals, so serialize → parse → serialize is
//! byte-identical.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::enorm::Hamiltonian;
use crate::ksw::{SaddleCertificate, StageRecord};
use crate::linops::{CMat, CVec, PositiveOperator};
use crate::quantum::QuantumOperation;
use crate::{Error, Result};

pub fn complex_to_value(z: Complex64) -> Value {
    serde_json::json!([z.re, z.im])
}

pub fn complex_from_value(v: &Value) -> Result<Complex64> {
    let pair = v
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| Error::InvalidInput("complex scalar must be a [re, im] pair".into()))?;
    let re = pair[0]
        .as_f64()
        .ok_or_else(|| Error::InvalidInput("non-numeric real part".into()))?;
    let im = pair[1]
        .as_f64()
        .ok_or_else(|| Error::InvalidInput("non-numeric imaginary part".into()))?;
    Ok(Complex64::new(re, im))
}

pub fn matrix_to_value(m: &CMat) -> Value {
    let rows: Vec<Value> = (0..m.nrows())
        .map(|i| Value::Array((0..m.ncols()).map(|j| complex_to_value(m[(i, j)])).collect()))
        .collect();
    Value::Array(rows)
}

pub fn matrix_from_value(v: &Value) -> Result<CMat> {
    let rows = v
        .as_array()
        .ok_or_else(|| Error::InvalidInput("matrix must be a nested array".into()))?;
    if rows.is_empty() {
        return Err(Error::InvalidInput("matrix has no rows".into()));
    }
    let ncols = rows[0]
        .as_array()
        .ok_or_else(|| Error::InvalidInput("matrix row must be an array".into()))?
        .len();
    if ncols == 0 {
        return Err(Error::InvalidInput("matrix has no columns".into()));
    }
    let mut out = CMat::zeros(rows.len(), ncols);
    for (i, row) in rows.iter().enumerate() {
        let entries = row
            .as_array()
            .ok_or_else(|| Error::InvalidInput("matrix row must be an array".into()))?;
        if entries.len() != ncols {
            return Err(Error::InvalidInput(format!(
                "ragged matrix: row {i} has {} entries, expected {ncols}",
                entries.len()
            )));
        }
        for (j, entry) in entries.iter().enumerate() {
            out[(i, j)] = complex_from_value(entry)?;
        }
    }
    Ok(out)
}

pub fn vector_to_value(v: &CVec) -> Value {
    Value::Array(v.iter().map(|z| complex_to_value(*z)).collect())
}

pub fn vector_from_value(v: &Value) -> Result<CVec> {
    let entries = v
        .as_array()
        .ok_or_else(|| Error::InvalidInput("vector must be an array".into()))?;
    let mut out = CVec::zeros(entries.len());
    for (i, entry) in entries.iter().enumerate() {
        out[i] = complex_from_value(entry)?;
    }
    Ok(out)
}

pub fn operation_to_value(op: &QuantumOperation) -> Value {
    serde_json::json!({
        "kind": "kraus",
        "d_in": op.d_in(),
        "d_out": op.d_out(),
        "kraus": op.kraus().iter().map(matrix_to_value).collect::<Vec<_>>(),
    })
}

pub fn operation_from_value(v: &Value) -> Result<QuantumOperation> {
    let kind = v
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::InvalidInput("operation must carry a \"kind\" field".into()))?;
    if kind != "kraus" {
        return Err(Error::InvalidInput(format!(
            "unsupported operation kind {kind:?}"
        )));
    }
    let d_in = v
        .get("d_in")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::InvalidInput("missing d_in".into()))? as usize;
    let d_out = v
        .get("d_out")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::InvalidInput("missing d_out".into()))? as usize;
    let kraus_vals = v
        .get("kraus")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::InvalidInput("missing kraus list".into()))?;
    let kraus = kraus_vals
        .iter()
        .map(matrix_from_value)
        .collect::<Result<Vec<_>>>()?;
    QuantumOperation::new(d_in, d_out, kraus)
}

pub fn hamiltonian_to_value(h: &Hamiltonian) -> Value {
    let basis_is_identity = crate::linops::max_abs(
        &(h.basis() - CMat::identity(h.dim(), h.dim())),
    ) == 0.0;
    if basis_is_identity {
        serde_json::json!({ "eigenvalues": h.eigenvalues() })
    } else {
        serde_json::json!({
            "eigenvalues": h.eigenvalues(),
            "basis": matrix_to_value(h.basis()),
        })
    }
}

pub fn hamiltonian_from_value(v: &Value) -> Result<Hamiltonian> {
    let eigenvalues: Vec<f64> = v
        .get("eigenvalues")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::InvalidInput("hamiltonian needs an eigenvalues list".into()))?
        .iter()
        .map(|e| {
            e.as_f64()
                .ok_or_else(|| Error::InvalidInput("non-numeric eigenvalue".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    match v.get("basis") {
        Some(Value::Null) | None => Hamiltonian::from_diagonal(eigenvalues),
        Some(basis) => Hamiltonian::new(eigenvalues, matrix_from_value(basis)?),
    }
}

pub fn state_to_value(p: &PositiveOperator) -> Value {
    matrix_to_value(p.matrix())
}

pub fn state_from_value(v: &Value) -> Result<PositiveOperator> {
    PositiveOperator::new(matrix_from_value(v)?)
}

pub fn certificate_to_value(cert: &SaddleCertificate) -> Value {
    serde_json::json!({
        "u": matrix_to_value(&cert.u),
        "rho": matrix_to_value(cert.rho.matrix()),
        "lower_bound": cert.lower_bound,
        "upper_bound": cert.upper_bound,
        "gap": cert.gap,
        "p_trace": cert.p_trace,
        "iterations": cert.iterations,
        "converged": cert.converged,
    })
}

/// Deserialized certificate payload (matrices plus the numeric fields).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateData {
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub gap: f64,
    pub p_trace: Vec<StageRecord>,
    pub iterations: usize,
    pub converged: bool,
}

pub fn certificate_from_value(v: &Value) -> Result<(CMat, CMat, CertificateData)> {
    let u = matrix_from_value(
        v.get("u")
            .ok_or_else(|| Error::InvalidInput("certificate missing u".into()))?,
    )?;
    let rho = matrix_from_value(
        v.get("rho")
            .ok_or_else(|| Error::InvalidInput("certificate missing rho".into()))?,
    )?;
    let data: CertificateData = serde_json::from_value(v.clone())?;
    Ok((u, rho, data))
}

pub fn read_value(path: &std::path::Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_value(path: &std::path::Path, v: &Value) -> Result<()> {
    std::fs::write(path, format!("{}\n", serde_json::to_string_pretty(v)?))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::gen::{gen_random_channel, InstanceKind, InstanceSpec};

    #[test]
    fn matrix_round_trip_is_byte_identical() {
        let mut rng = crate::harness::rng::substream(77, 0);
        let m = crate::harness::rng::gaussian_cmat(&mut rng, 3, 2);
        let v = matrix_to_value(&m);
        let text = serde_json::to_string(&v).unwrap();
        let parsed: Value = serde_json::from_str(&text).unwrap();
        let back = matrix_from_value(&parsed).unwrap();
        assert_eq!(m, back);
        assert_eq!(text, serde_json::to_string(&matrix_to_value(&back)).unwrap());
    }

    #[test]
    fn operation_round_trip() {
        let op = gen_random_channel(&InstanceSpec {
            kind: InstanceKind::RandomChannel,
            d_a: 2,
            d_b: 3,
            kraus_count: 2,
            seed: 5,
            param: None,
        })
        .unwrap();
        let v = operation_to_value(&op);
        let back = operation_from_value(&v).unwrap();
        assert_eq!(op.d_in(), back.d_in());
        assert_eq!(op.d_out(), back.d_out());
        for (a, b) in op.kraus().iter().zip(back.kraus()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn hamiltonian_round_trip_with_and_without_basis() {
        let h = Hamiltonian::from_diagonal(vec![0.0, 1.0, 2.0]).unwrap();
        let v = hamiltonian_to_value(&h);
        assert!(v.get("basis").is_none());
        let back = hamiltonian_from_value(&v).unwrap();
        assert_eq!(back.eigenvalues(), h.eigenvalues());

        let mut rng = crate::harness::rng::substream(78, 0);
        let q = crate::harness::rng::gaussian_cmat(&mut rng, 2, 2).qr().q();
        let hr = Hamiltonian::new(vec![0.0, 1.0], q).unwrap();
        let vr = hamiltonian_to_value(&hr);
        assert!(vr.get("basis").is_some());
        let backr = hamiltonian_from_value(&vr).unwrap();
        assert!(crate::linops::max_abs(&(backr.matrix() - hr.matrix())) < 1e-12);
    }

    #[test]
    fn rejects_malformed_payloads() {
        assert!(complex_from_value(&serde_json::json!([1.0])).is_err());
        assert!(matrix_from_value(&serde_json::json!([[[1.0, 0.0]], [[1.0, 0.0], [0.0, 0.0]]])).is_err());
        assert!(operation_from_value(&serde_json::json!({"kind": "choi"})).is_err());
    }
}
