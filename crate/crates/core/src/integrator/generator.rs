// Copyright 2026 hybridq Contributors
// SPDX-License-Identifier: Apache-2.0

//! Matrix-free Lindblad generator on block-stored density matrices.
//!
//! L(ρ) = −i(H_eff ρ − ρ H_eff†) + Σ_k L_k ρ L_k†, H_eff = H − (i/2) Σ_k L_k†L_k.
//!
//! H_eff is block diagonal in the charge sectors and kept as sparse rows per
//! sector; each jump maps sector Q to Q + shift.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, ZERO};

use super::sectors::{BlockPattern, ChargeBasis};

/// Compressed sparse rows of one sector-diagonal operator.
#[derive(Clone, Debug, Default)]
struct SparseRows {
    ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseRows {
    fn from_dense(m: &CMatrix) -> Self {
        let mut out = Self {
            ptr: vec![0],
            ..Self::default()
        };
        for row in m.rows() {
            for (c, v) in row.iter().enumerate() {
                if *v != ZERO {
                    out.cols.push(c);
                    out.vals.push(*v);
                }
            }
            out.ptr.push(out.cols.len());
        }
        out
    }

    fn n_rows(&self) -> usize {
        self.ptr.len() - 1
    }

    fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        (self.ptr[r]..self.ptr[r + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }

    fn mul_vec(&self, x: &[C64], y: &mut [C64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            *yr = self.row(r).map(|(c, v)| v * x[c]).sum();
        }
    }

    /// Gershgorin interval, using only the Hermitian part of the diagonal.
    fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for r in 0..self.n_rows() {
            let (mut centre, mut radius) = (0.0, 0.0);
            for (c, v) in self.row(r) {
                if c == r {
                    centre = v.re;
                } else {
                    radius += v.norm();
                }
            }
            lo = lo.min(centre - radius);
            hi = hi.max(centre + radius);
        }
        if lo > hi {
            (0.0, 0.0)
        } else {
            (lo, hi)
        }
    }
}

/// Nonzeros (target local row, source local col, weight) of a jump, per source sector.
#[derive(Clone, Debug)]
struct Jump {
    per_source: Vec<Vec<(usize, usize, C64)>>,
}

#[derive(Clone, Debug)]
pub struct Generator {
    pattern: Arc<BlockPattern>,
    hamiltonian: Vec<SparseRows>,
    heff: Vec<SparseRows>,
    heff_conj: Vec<SparseRows>,
    jumps: Vec<Jump>,
    /// Per stored block: (jump, source block) pairs feeding it.
    routes: Vec<Vec<(usize, usize)>>,
    sector_bounds: Vec<(f64, f64)>,
    dissipative_width: f64,
    width: f64,
}

impl Generator {
    /// `jumps` are already scaled by √rate. H must conserve the charge and each
    /// jump must shift it uniformly.
    pub fn new(
        basis: &Arc<ChargeBasis>,
        pattern: &Arc<BlockPattern>,
        hamiltonian: &CMatrix,
        jumps: &[CMatrix],
    ) -> Result<Self> {
        let d = basis.dim();
        if hamiltonian.dim() != (d, d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: hamiltonian.nrows(),
            });
        }
        if basis.shift_of(hamiltonian) != Some(0) {
            return Err(Error::SectorMismatch(
                "hamiltonian mixes charge sectors".into(),
            ));
        }
        let ns = basis.n_sectors();
        let mut dense_h: Vec<CMatrix> = (0..ns)
            .map(|q| sector_block(basis, hamiltonian, q))
            .collect();
        let hamiltonian_rows: Vec<SparseRows> =
            dense_h.iter().map(SparseRows::from_dense).collect();

        let mut compiled = Vec::with_capacity(jumps.len());
        let mut shifts = Vec::with_capacity(jumps.len());
        let mut dissipative = 0.0;
        for (k, l) in jumps.iter().enumerate() {
            if l.dim() != (d, d) {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: l.nrows(),
                });
            }
            let shift = basis.shift_of(l).ok_or_else(|| {
                Error::SectorMismatch(format!("jump operator {k} has no uniform charge shift"))
            })?;
            let mut per_source = vec![Vec::new(); ns];
            // Rows of L, for the Gram matrix L†L.
            let mut by_row: BTreeMap<usize, Vec<(usize, C64)>> = BTreeMap::new();
            let mut max_w: f64 = 0.0;
            for ((r, c), v) in l.indexed_iter() {
                if *v == ZERO {
                    continue;
                }
                per_source[basis.charge(c)].push((basis.local(r), basis.local(c), *v));
                by_row.entry(r).or_default().push((c, *v));
                max_w = max_w.max(v.norm_sqr());
            }
            dissipative += max_w;
            for entries in by_row.values() {
                for &(a, wa) in entries {
                    for &(b, wb) in entries {
                        // (L†L)[a, b] += conj(L[r, a]) L[r, b]; a and b share a sector.
                        let q = basis.charge(a);
                        dense_h[q][[basis.local(a), basis.local(b)]] +=
                            C64::new(0.0, -0.5) * wa.conj() * wb;
                    }
                }
            }
            compiled.push(Jump { per_source });
            shifts.push(shift);
        }
        let heff: Vec<SparseRows> = dense_h.iter().map(SparseRows::from_dense).collect();
        let heff_conj = heff
            .iter()
            .map(|m| SparseRows {
                vals: m.vals.iter().map(|v| v.conj()).collect(),
                ..m.clone()
            })
            .collect();

        let blocks = pattern.blocks();
        let mut routes = vec![Vec::new(); blocks.len()];
        for (bi, b) in blocks.iter().enumerate() {
            for (j, &s) in shifts.iter().enumerate() {
                let (r, c) = (b.row as isize - s, b.col as isize - s);
                if r < 0 || c < 0 || r >= ns as isize || c >= ns as isize {
                    continue;
                }
                if let Some(src) = pattern.find(r as usize, c as usize) {
                    routes[bi].push((j, src));
                }
            }
        }
        for b in blocks {
            for (j, &s) in shifts.iter().enumerate() {
                let (r, c) = (b.row as isize + s, b.col as isize + s);
                let feeds = !compiled[j].per_source[b.row].is_empty()
                    && !compiled[j].per_source[b.col].is_empty();
                if feeds && pattern.find(r as usize, c as usize).is_none() {
                    return Err(Error::SectorMismatch(format!(
                        "block ({}, {}) feeds unstored block ({r}, {c})",
                        b.row, b.col
                    )));
                }
            }
        }

        let sector_bounds = hamiltonian_rows
            .iter()
            .map(SparseRows::gershgorin)
            .collect();
        let mut gen = Self {
            pattern: pattern.clone(),
            hamiltonian: hamiltonian_rows,
            heff,
            heff_conj,
            jumps: compiled,
            routes,
            sector_bounds,
            dissipative_width: 2.0 * dissipative,
            width: 0.0,
        };
        gen.width = gen.width_from_bounds();
        Ok(gen)
    }

    /// Number of stored complex entries of a state.
    pub fn len(&self) -> usize {
        self.pattern.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pattern.is_empty()
    }

    pub fn pattern(&self) -> &Arc<BlockPattern> {
        &self.pattern
    }

    /// Upper bound on |Im λ| + |Re λ| over the generator spectrum on the stored blocks.
    pub fn spectral_width(&self) -> f64 {
        self.width
    }

    pub fn set_spectral_width(&mut self, w: f64) {
        self.width = w;
    }

    fn width_from_bounds(&self) -> f64 {
        let mut w: f64 = 0.0;
        for b in self.pattern.blocks() {
            let (lo_r, hi_r) = self.sector_bounds[b.row];
            let (lo_c, hi_c) = self.sector_bounds[b.col];
            w = w.max((hi_r - lo_c).abs()).max((hi_c - lo_r).abs());
        }
        w + self.dissipative_width
    }

    /// Tightens the width with Lanczos estimates of each sector's extreme
    /// eigenvalues, padded by `margin` (relative) and clipped to Gershgorin.
    /// A width that turns out too small is caught by the divergence guard.
    pub fn refine_width(&mut self, iterations: usize, margin: f64) {
        for q in self.pattern.active_sectors() {
            let h = &self.hamiltonian[q];
            if h.n_rows() == 0 {
                continue;
            }
            let (lo, hi) = lanczos_extremes(h, iterations);
            let pad = margin * (hi - lo) + 1e-12 * hi.abs().max(lo.abs());
            let (glo, ghi) = self.sector_bounds[q];
            self.sector_bounds[q] = ((lo - pad).max(glo), (hi + pad).min(ghi));
        }
        self.width = self.width_from_bounds();
    }

    /// out += scale · L(x) on stored blocks.
    pub fn apply_add(&self, x: &[C64], scale: f64, out: &mut [C64]) {
        debug_assert_eq!(x.len(), self.len());
        let blocks = self.pattern.blocks();
        let left = C64::new(0.0, -scale);
        let right = C64::new(0.0, scale);
        for (bi, b) in blocks.iter().enumerate() {
            let (rows, cols) = (b.rows, b.cols);
            let xb = &x[b.offset..b.offset + b.len()];
            let ob = &mut out[b.offset..b.offset + b.len()];
            let hl = &self.heff[b.row];
            let hr = &self.heff_conj[b.col];
            for r in 0..rows {
                let orow = &mut ob[r * cols..(r + 1) * cols];
                // −i H_eff x
                for (c, v) in hl.row(r) {
                    let w = v * left;
                    for (o, s) in orow.iter_mut().zip(&xb[c * cols..(c + 1) * cols]) {
                        *o += w * s;
                    }
                }
                // +i x H_eff†: (x H†)[r, c] = Σ_m x[r, m] conj(H[c, m])
                let xrow = &xb[r * cols..(r + 1) * cols];
                for (c, o) in orow.iter_mut().enumerate() {
                    let mut acc = ZERO;
                    for k in hr.ptr[c]..hr.ptr[c + 1] {
                        acc += xrow[hr.cols[k]] * hr.vals[k];
                    }
                    *o += right * acc;
                }
            }
            for &(j, src) in &self.routes[bi] {
                let sb = &blocks[src];
                let xs = &x[sb.offset..sb.offset + sb.len()];
                let jump = &self.jumps[j];
                let (row_list, col_list) = (&jump.per_source[sb.row], &jump.per_source[sb.col]);
                for &(tr, sa, wa) in row_list {
                    let wa = wa * scale;
                    let srow = &xs[sa * sb.cols..(sa + 1) * sb.cols];
                    let orow = &mut ob[tr * cols..(tr + 1) * cols];
                    for &(tc, sc, wb) in col_list {
                        orow[tc] += wa * wb.conj() * srow[sc];
                    }
                }
            }
        }
    }

    /// L(x) into a fresh vector.
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; x.len()];
        self.apply_add(x, 1.0, &mut out);
        out
    }
}

fn sector_block(basis: &ChargeBasis, m: &CMatrix, q: usize) -> CMatrix {
    let idx = basis.sector(q);
    CMatrix::from_shape_fn((idx.len(), idx.len()), |(i, j)| m[[idx[i], idx[j]]])
}

/// Extreme Ritz values after Lanczos with full reorthogonalization.
fn lanczos_extremes(h: &SparseRows, iterations: usize) -> (f64, f64) {
    let d = h.n_rows();
    let m = iterations.min(d).max(1);
    // Deterministic start vector with weight on every basis state.
    let mut v: Vec<C64> = (0..d)
        .map(|k| C64::new(1.0 + ((k * 7919) % 97) as f64 / 97.0, 0.0))
        .collect();
    normalize(&mut v);
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m);
    let mut alpha = Vec::with_capacity(m);
    let mut beta: Vec<f64> = Vec::with_capacity(m);
    let mut w = vec![ZERO; d];
    loop {
        h.mul_vec(&v, &mut w);
        let a: f64 = v.iter().zip(&w).map(|(x, y)| (x.conj() * y).re).sum();
        alpha.push(a);
        basis.push(v.clone());
        if basis.len() == m {
            break;
        }
        for _pass in 0..2 {
            for q in &basis {
                let ov: C64 = q.iter().zip(&w).map(|(x, y)| x.conj() * y).sum();
                w.iter_mut().zip(q).for_each(|(y, x)| *y -= ov * x);
            }
        }
        let b = norm(&w);
        if b <= 1e-12 * a.abs().max(1.0) {
            break;
        }
        beta.push(b);
        v = w.iter().map(|z| z / b).collect();
    }
    let n = alpha.len();
    let mut t = ndarray::Array2::<f64>::zeros((n, n));
    for i in 0..n {
        t[[i, i]] = alpha[i];
        if i + 1 < n {
            t[[i, i + 1]] = beta[i];
            t[[i + 1, i]] = beta[i];
        }
    }
    let evals = linalg::symmetric_eigenvalues(t);
    (evals[0], evals[n - 1])
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(v: &mut [C64]) {
    let n = norm(v);
    v.iter_mut().for_each(|z| *z /= n);
}
