// Copyright 2026 hybridq Contributors
// SPDX-License-Identifier: Apache-2.0

//! Exact propagation through the dense vectorized Liouvillian.
//!
//! Column stacking: vec(X)[i + j·d] = X[i, j], so vec(AXB) = (Bᵀ ⊗ A) vec(X).

use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, Operator};
use crate::linalg::{self, CMatrix, C64, ZERO};
use crate::model::CollapseOperator;

/// Largest supported d² (the superoperator is dense, d² × d²).
pub const ORACLE_LIMIT: usize = 4096;

pub fn vectorized_liouvillian(h: &CMatrix, collapse: &[CollapseOperator]) -> CMatrix {
    let d = h.nrows();
    let id = linalg::identity(d);
    let ht = h.t().to_owned();
    let minus_i = C64::new(0.0, -1.0);
    let mut sup = (linalg::kron(id.view(), h.view()) - linalg::kron(ht.view(), id.view()))
        .mapv(|z| z * minus_i);
    for c in collapse {
        let l = c.operator.matrix().mapv(|z| z * c.rate.sqrt());
        let ldl = linalg::dagger(l.view()).dot(&l);
        let lconj = l.mapv(|z| z.conj());
        sup = sup + linalg::kron(lconj.view(), l.view())
            - linalg::kron(id.view(), ldl.view()).mapv(|z| z * 0.5)
            - linalg::kron(ldl.t(), id.view()).mapv(|z| z * 0.5);
    }
    sup
}

pub fn vectorize(m: &CMatrix) -> Vec<C64> {
    let d = m.nrows();
    let mut v = vec![ZERO; d * d];
    for j in 0..d {
        for i in 0..d {
            v[i + j * d] = m[[i, j]];
        }
    }
    v
}

pub fn unvectorize(v: &[C64], d: usize) -> CMatrix {
    CMatrix::from_shape_fn((d, d), |(i, j)| v[i + j * d])
}

/// ρ(t) = e^{t𝓛} ρ₀ for a constant Hamiltonian.
pub fn expm_oracle(
    rho0: &DensityMatrix,
    h: &Operator,
    collapse: &[CollapseOperator],
    t: f64,
) -> Result<DensityMatrix> {
    let d = rho0.layout().total_dim();
    if d * d > ORACLE_LIMIT {
        return Err(Error::OracleTooLarge {
            dim: d,
            limit: ORACLE_LIMIT,
        });
    }
    if h.matrix().nrows() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: h.matrix().nrows(),
        });
    }
    if t == 0.0 {
        return Ok(rho0.clone());
    }
    let sup = vectorized_liouvillian(h.matrix(), collapse).mapv(|z| z * t);
    let prop = linalg::expm(sup.view())?;
    let v = ndarray::Array1::from(vectorize(rho0.matrix()));
    let out = prop.dot(&v);
    DensityMatrix::from_matrix(
        rho0.layout().clone(),
        unvectorize(out.as_slice().expect("contiguous"), d),
    )
}
