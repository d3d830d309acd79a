// Copyright 2026 hybridq Contributors
// SPDX-License-Identifier: Apache-2.0

//! Small dense complex linear algebra: Kronecker products, decompositions and
//! the matrix exponential used by the oracle.

use ndarray::{Array2, ArrayView2, Axis};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = Array2<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn identity(n: usize) -> CMatrix {
    Array2::from_diag_elem(n, ONE)
}

pub fn kron(a: ArrayView2<C64>, b: ArrayView2<C64>) -> CMatrix {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for ((i, j), &x) in a.indexed_iter() {
        if x == ZERO {
            continue;
        }
        let mut block = out.slice_mut(ndarray::s![i * br..(i + 1) * br, j * bc..(j + 1) * bc]);
        block.zip_mut_with(&b, |o, &y| *o = x * y);
    }
    out
}

pub fn dagger(a: ArrayView2<C64>) -> CMatrix {
    a.t().mapv(|z| z.conj())
}

pub fn commutator(a: ArrayView2<C64>, b: ArrayView2<C64>) -> CMatrix {
    a.dot(&b) - b.dot(&a)
}

pub fn trace(a: ArrayView2<C64>) -> C64 {
    a.diag().sum()
}

pub fn frobenius_norm(a: ArrayView2<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// ‖A − A†‖_F / ‖A‖_F, zero for the zero matrix.
pub fn hermiticity_residual(a: ArrayView2<C64>) -> f64 {
    let norm = frobenius_norm(a);
    if norm == 0.0 {
        return 0.0;
    }
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (a[[i, j]] - a[[j, i]].conj()).norm_sqr();
        }
    }
    acc.sqrt() / norm
}

pub fn one_norm(a: ArrayView2<C64>) -> f64 {
    a.axis_iter(Axis(1))
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Whether the Hermitian part of `a` shifted by `shift·I` admits a Cholesky
/// factorization, i.e. its smallest eigenvalue exceeds `-shift`.
///
/// The factor inherits the row envelope of `a`, so banded inputs are cheap.
pub fn is_positive_shifted(a: ArrayView2<C64>, shift: f64) -> bool {
    let n = a.nrows();
    // First structurally nonzero column of each row of the lower triangle.
    let first: Vec<usize> = (0..n)
        .map(|i| {
            (0..i)
                .find(|&j| a[[i, j]] != ZERO || a[[j, i]] != ZERO)
                .unwrap_or(i)
        })
        .collect();
    // Row-major lower factor; row i holds L[i, first[i]..=i].
    let mut l = vec![ZERO; n * n];
    for i in 0..n {
        for j in first[i]..=i {
            let aij = if i == j {
                C64::new(a[[i, i]].re + shift, 0.0)
            } else {
                0.5 * (a[[i, j]] + a[[j, i]].conj())
            };
            let k0 = first[i].max(first[j]);
            let (ri, rj) = (&l[i * n + k0..i * n + j], &l[j * n + k0..j * n + j]);
            let mut s = aij;
            for (x, y) in ri.iter().zip(rj) {
                s -= x * y.conj();
            }
            if i == j {
                if !(s.re > 0.0) {
                    return false;
                }
                l[i * n + i] = C64::new(s.re.sqrt(), 0.0);
            } else {
                l[i * n + j] = s / l[j * n + j].re;
            }
        }
    }
    true
}

/// Eigenvalues of a Hermitian matrix in ascending order.
///
/// Uses cyclic Jacobi on the real symmetric embedding [[Re, −Im], [Im, Re]],
/// whose spectrum is that of `a` with every eigenvalue doubled. Meant for
/// matrices up to a few hundred rows.
pub fn hermitian_eigenvalues(a: ArrayView2<C64>) -> Vec<f64> {
    let n = a.nrows();
    let m = 2 * n;
    let mut s = Array2::<f64>::zeros((m, m));
    for i in 0..n {
        for j in 0..n {
            let z = 0.5 * (a[[i, j]] + a[[j, i]].conj());
            s[[i, j]] = z.re;
            s[[i + n, j + n]] = z.re;
            s[[i, j + n]] = -z.im;
            s[[i + n, j]] = z.im;
        }
    }
    symmetric_eigenvalues(s).into_iter().step_by(2).collect()
}

/// Eigenvalues of a real symmetric matrix in ascending order (cyclic Jacobi).
pub fn symmetric_eigenvalues(mut a: Array2<f64>) -> Vec<f64> {
    let m = a.nrows();
    let total: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..m {
            for q in p + 1..m {
                off += a[[p, q]] * a[[p, q]];
            }
        }
        if off.sqrt() <= 1e-15 * total.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                let apq = a[[p, q]];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..m {
                    let (akp, akq) = (a[[k, p]], a[[k, q]]);
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..m {
                    let (apk, aqk) = (a[[p, k]], a[[q, k]]);
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut evals: Vec<f64> = (0..m).map(|i| a[[i, i]]).collect();
    evals.sort_by(|x, y| x.total_cmp(y));
    evals
}

/// Trace distance ½‖A − B‖₁ for Hermitian arguments.
pub fn trace_distance(a: ArrayView2<C64>, b: ArrayView2<C64>) -> f64 {
    let diff = &a - &b;
    0.5 * hermitian_eigenvalues(diff.view())
        .iter()
        .map(|x| x.abs())
        .sum::<f64>()
}

/// Solves A X = B by LU decomposition with partial pivoting.
pub fn lu_solve(a: ArrayView2<C64>, b: ArrayView2<C64>) -> Result<CMatrix> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.ncols(),
        });
    }
    if b.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: b.nrows(),
        });
    }
    let mut lu = a.to_owned();
    let mut x = b.to_owned();
    let scale = one_norm(a).max(f64::MIN_POSITIVE);
    for k in 0..n {
        let mut piv = k;
        let mut best = lu[[k, k]].norm();
        for r in k + 1..n {
            let v = lu[[r, k]].norm();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best <= 1e-300 * scale {
            return Err(Error::Singular);
        }
        if piv != k {
            for c in 0..n {
                lu.swap([k, c], [piv, c]);
            }
            for c in 0..x.ncols() {
                x.swap([k, c], [piv, c]);
            }
        }
        let pivot = lu[[k, k]];
        for r in k + 1..n {
            let f = lu[[r, k]] / pivot;
            if f == ZERO {
                continue;
            }
            lu[[r, k]] = f;
            for c in k + 1..n {
                let v = lu[[k, c]];
                lu[[r, c]] -= f * v;
            }
            for c in 0..x.ncols() {
                let v = x[[k, c]];
                x[[r, c]] -= f * v;
            }
        }
    }
    for k in (0..n).rev() {
        let pivot = lu[[k, k]];
        for c in 0..x.ncols() {
            let mut s = x[[k, c]];
            for j in k + 1..n {
                s -= lu[[k, j]] * x[[j, c]];
            }
            x[[k, c]] = s / pivot;
        }
    }
    Ok(x)
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Matrix exponential by degree-13 Padé approximation with scaling and squaring.
pub fn expm(a: ArrayView2<C64>) -> Result<CMatrix> {
    let n = a.nrows();
    let theta13 = 5.371920351148152;
    let norm = one_norm(a);
    let squarings = if norm > theta13 {
        (norm / theta13).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a.mapv(|z| z / 2f64.powi(squarings));
    let b = &PADE13;
    let id = identity(n);
    let a2 = scaled.dot(&scaled);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);
    let inner_u = &a6 * b[13] + &a4 * b[11] + &a2 * b[9];
    let u_poly = a6.dot(&inner_u) + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1];
    let u = scaled.dot(&u_poly);
    let inner_v = &a6 * b[12] + &a4 * b[10] + &a2 * b[8];
    let v = a6.dot(&inner_v) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    let mut r = lu_solve((&v - &u).view(), (&v + &u).view())?;
    for _ in 0..squarings {
        r = r.dot(&r);
    }
    Ok(r)
}
