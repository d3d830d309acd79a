// Copyright 2026 hybridq Contributors
// SPDX-License-Identifier: Apache-2.0

//! Charge sectors of the product basis and block storage of density matrices.
//!
//! When every Hamiltonian term conserves an additive charge Q and every jump
//! operator shifts it by a fixed amount, the Lindbladian maps the block
//! ρ[Q, Q'] into blocks with the same difference Q − Q'. Blocks that are zero
//! initially and cannot be fed by a jump stay zero, so only the reachable
//! blocks with Q ≥ Q' are stored; blocks with Q < Q' are their adjoints.

use std::collections::{BTreeSet, HashMap};

use crate::hilbert::{SpaceLayout, Subsystem};
use crate::linalg::{CMatrix, C64, ZERO};

/// Additive charge per basis state, grouped into sectors.
#[derive(Clone, Debug, PartialEq)]
pub struct ChargeBasis {
    charge: Vec<usize>,
    local: Vec<usize>,
    sectors: Vec<Vec<usize>>,
}

impl ChargeBasis {
    pub fn from_charges(charge: Vec<usize>) -> Self {
        let n_sectors = charge.iter().copied().max().map_or(0, |m| m + 1);
        let mut sectors = vec![Vec::new(); n_sectors];
        let mut local = vec![0; charge.len()];
        for (g, &q) in charge.iter().enumerate() {
            local[g] = sectors[q].len();
            sectors[q].push(g);
        }
        Self {
            charge,
            local,
            sectors,
        }
    }

    /// One sector holding the whole space.
    pub fn trivial(dim: usize) -> Self {
        Self::from_charges(vec![0; dim])
    }

    /// Q = σ⁺σ⁻ + n_c + n_r + n_s. The i mode is driven classically and
    /// carries no charge.
    pub fn excitation_number(layout: &SpaceLayout) -> Self {
        let weights: Vec<usize> = layout
            .subsystems()
            .iter()
            .map(|(s, _)| usize::from(*s != Subsystem::ModeI))
            .collect();
        let charge = (0..layout.total_dim())
            .map(|g| {
                layout
                    .occupations(g)
                    .iter()
                    .zip(&weights)
                    .map(|(n, w)| n * w)
                    .sum()
            })
            .collect();
        Self::from_charges(charge)
    }

    pub fn dim(&self) -> usize {
        self.charge.len()
    }

    pub fn n_sectors(&self) -> usize {
        self.sectors.len()
    }

    pub fn charge(&self, global: usize) -> usize {
        self.charge[global]
    }

    pub fn local(&self, global: usize) -> usize {
        self.local[global]
    }

    /// Global indices of a sector, ascending.
    pub fn sector(&self, q: usize) -> &[usize] {
        &self.sectors[q]
    }

    /// Charge shift of an operator, if uniform. A zero operator returns `Some(0)`.
    pub fn shift_of(&self, op: &CMatrix) -> Option<isize> {
        let mut shift = None;
        for ((r, c), v) in op.indexed_iter() {
            if *v == ZERO {
                continue;
            }
            let s = self.charge[r] as isize - self.charge[c] as isize;
            match shift {
                None => shift = Some(s),
                Some(prev) if prev != s => return None,
                _ => {}
            }
        }
        Some(shift.unwrap_or(0))
    }
}

/// Location of one stored block ρ[row sector, col sector].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Block {
    pub row: usize,
    pub col: usize,
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Block {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_diagonal(&self) -> bool {
        self.row == self.col
    }
}

/// Stored blocks, with row sector ≥ col sector.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockPattern {
    blocks: Vec<Block>,
    index: HashMap<(usize, usize), usize>,
    len: usize,
}

impl BlockPattern {
    /// Closure of `seeds` under the jump shifts (seeds are normalized to row ≥ col).
    pub fn reachable(
        basis: &ChargeBasis,
        seeds: impl IntoIterator<Item = (usize, usize)>,
        shifts: &[isize],
    ) -> Self {
        let n = basis.n_sectors() as isize;
        let mut set: BTreeSet<(usize, usize)> = BTreeSet::new();
        let mut stack: Vec<(usize, usize)> = seeds
            .into_iter()
            .map(|(a, b)| if a >= b { (a, b) } else { (b, a) })
            .collect();
        while let Some(key) = stack.pop() {
            if !set.insert(key) {
                continue;
            }
            for &s in shifts {
                let (r, c) = (key.0 as isize + s, key.1 as isize + s);
                if r >= 0 && c >= 0 && r < n && c < n {
                    stack.push((r as usize, c as usize));
                }
            }
        }
        let mut blocks = Vec::with_capacity(set.len());
        let mut index = HashMap::with_capacity(set.len());
        let mut offset = 0;
        for (row, col) in set {
            let b = Block {
                row,
                col,
                offset,
                rows: basis.sector(row).len(),
                cols: basis.sector(col).len(),
            };
            offset += b.len();
            index.insert((row, col), blocks.len());
            blocks.push(b);
        }
        Self {
            blocks,
            index,
            len: offset,
        }
    }

    /// Every block of the lower triangle.
    pub fn full(basis: &ChargeBasis) -> Self {
        let n = basis.n_sectors();
        Self::reachable(
            basis,
            (0..n).flat_map(|r| (0..=r).map(move |c| (r, c))),
            &[],
        )
    }

    /// Blocks holding nonzero entries of `rho`, closed under the shifts.
    pub fn for_state(basis: &ChargeBasis, rho: &CMatrix, shifts: &[isize]) -> Self {
        let mut seeds = BTreeSet::new();
        for ((r, c), v) in rho.indexed_iter() {
            if *v != ZERO {
                seeds.insert((basis.charge(r), basis.charge(c)));
            }
        }
        Self::reachable(basis, seeds, shifts)
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn find(&self, row: usize, col: usize) -> Option<usize> {
        self.index.get(&(row, col)).copied()
    }

    /// Number of stored complex entries.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Sectors with a stored diagonal block.
    pub fn active_sectors(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .filter(|b| b.is_diagonal())
            .map(|b| b.row)
            .collect()
    }
}

/// Dense ρ → stored blocks (entries outside the pattern are dropped).
pub fn pack(basis: &ChargeBasis, pattern: &BlockPattern, rho: &CMatrix) -> Vec<C64> {
    let mut x = vec![ZERO; pattern.len()];
    for b in pattern.blocks() {
        let (rs, cs) = (basis.sector(b.row), basis.sector(b.col));
        for (i, &gr) in rs.iter().enumerate() {
            for (j, &gc) in cs.iter().enumerate() {
                x[b.offset + i * b.cols + j] = rho[[gr, gc]];
            }
        }
    }
    x
}

/// Largest |entry| of `rho` outside the pattern.
pub fn unpacked_residual(basis: &ChargeBasis, pattern: &BlockPattern, rho: &CMatrix) -> f64 {
    rho.indexed_iter()
        .filter(|((r, c), _)| {
            let (qr, qc) = (basis.charge(*r), basis.charge(*c));
            let key = if qr >= qc { (qr, qc) } else { (qc, qr) };
            pattern.find(key.0, key.1).is_none()
        })
        .map(|(_, v)| v.norm())
        .fold(0.0, f64::max)
}

/// Stored blocks → dense Hermitian ρ.
pub fn unpack(basis: &ChargeBasis, pattern: &BlockPattern, x: &[C64]) -> CMatrix {
    let d = basis.dim();
    let mut rho = CMatrix::zeros((d, d));
    for b in pattern.blocks() {
        let (rs, cs) = (basis.sector(b.row), basis.sector(b.col));
        for (i, &gr) in rs.iter().enumerate() {
            for (j, &gc) in cs.iter().enumerate() {
                let v = x[b.offset + i * b.cols + j];
                rho[[gr, gc]] = v;
                if !b.is_diagonal() {
                    rho[[gc, gr]] = v.conj();
                }
            }
        }
    }
    rho
}

/// Dense ρ restricted to the active sectors, rows ordered by sector.
///
/// Off-diagonal sector blocks only couple nearby charges, so this matrix is
/// banded and its Cholesky factorization is cheap.
pub fn compressed(basis: &ChargeBasis, pattern: &BlockPattern, x: &[C64]) -> CMatrix {
    let active = pattern.active_sectors();
    let mut start = vec![usize::MAX; basis.n_sectors()];
    let mut n = 0;
    for &q in &active {
        start[q] = n;
        n += basis.sector(q).len();
    }
    let mut m = CMatrix::zeros((n, n));
    for b in pattern.blocks() {
        let (r0, c0) = (start[b.row], start[b.col]);
        if r0 == usize::MAX || c0 == usize::MAX {
            continue;
        }
        for i in 0..b.rows {
            for j in 0..b.cols {
                let v = x[b.offset + i * b.cols + j];
                m[[r0 + i, c0 + j]] = v;
                if !b.is_diagonal() {
                    m[[c0 + j, r0 + i]] = v.conj();
                }
            }
        }
    }
    m
}

/// Trace, purity and Hermiticity residual ‖ρ − ρ†‖_F/‖ρ‖_F of stored blocks.
pub fn block_invariants(pattern: &BlockPattern, x: &[C64]) -> (C64, f64, f64) {
    let mut trace = ZERO;
    let mut norm2 = 0.0;
    let mut anti2 = 0.0;
    for b in pattern.blocks() {
        let data = &x[b.offset..b.offset + b.len()];
        let weight = if b.is_diagonal() { 1.0 } else { 2.0 };
        norm2 += weight * data.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if b.is_diagonal() {
            for i in 0..b.rows {
                trace += data[i * b.cols + i];
                for j in 0..b.cols {
                    anti2 += (data[i * b.cols + j] - data[j * b.cols + i].conj()).norm_sqr();
                }
            }
        }
    }
    let herm = if norm2 > 0.0 {
        (anti2 / norm2).sqrt()
    } else {
        0.0
    };
    (trace, norm2, herm)
}

/// Symmetrizes the diagonal blocks, removing round-off drift.
pub fn rehermitize(pattern: &BlockPattern, x: &mut [C64]) {
    for b in pattern.blocks().iter().filter(|b| b.is_diagonal()) {
        let data = &mut x[b.offset..b.offset + b.len()];
        let n = b.rows;
        for i in 0..n {
            data[i * n + i].im = 0.0;
            for j in i + 1..n {
                let avg = 0.5 * (data[i * n + j] + data[j * n + i].conj());
                data[i * n + j] = avg;
                data[j * n + i] = avg.conj();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::Truncation;

    #[test]
    fn excitation_sectors_partition_the_basis() {
        let layout = SpaceLayout::full(&Truncation {
            cavity: 3,
            mode_i: 2,
            mode_r: 2,
            mode_s: 2,
        })
        .unwrap();
        let basis = ChargeBasis::excitation_number(&layout);
        assert_eq!(basis.n_sectors(), 1 + 2 + 1 + 1 + 1);
        let total: usize = (0..basis.n_sectors()).map(|q| basis.sector(q).len()).sum();
        assert_eq!(total, layout.total_dim());
        // Vacuum and its i-mode partner are the only charge-0 states.
        assert_eq!(basis.sector(0).len(), 2);
        for g in 0..layout.total_dim() {
            assert_eq!(basis.sector(basis.charge(g))[basis.local(g)], g);
        }
    }

    #[test]
    fn pack_unpack_roundtrip() {
        let basis = ChargeBasis::from_charges(vec![0, 1, 1, 2]);
        let pattern = BlockPattern::full(&basis);
        let rho = CMatrix::from_shape_fn((4, 4), |(r, c)| {
            let v = C64::new((r * 4 + c) as f64, (r as f64) - (c as f64));
            if r >= c {
                v
            } else {
                C64::new((c * 4 + r) as f64, (c as f64) - (r as f64)).conj()
            }
        });
        let x = pack(&basis, &pattern, &rho);
        assert_eq!(x.len(), 1 + 2 + 4 + 1 + 2 + 1);
        assert_eq!(unpack(&basis, &pattern, &x), rho);
    }

    #[test]
    fn decay_closure_stays_below_seed() {
        let basis = ChargeBasis::from_charges(vec![0, 1, 2, 3]);
        let pattern = BlockPattern::reachable(&basis, [(2, 2)], &[-1]);
        let keys: Vec<_> = pattern.blocks().iter().map(|b| (b.row, b.col)).collect();
        assert_eq!(keys, vec![(0, 0), (1, 1), (2, 2)]);
        let pattern = BlockPattern::reachable(&basis, [(1, 2)], &[-1, 1]);
        let keys: Vec<_> = pattern.blocks().iter().map(|b| (b.row, b.col)).collect();
        assert_eq!(keys, vec![(1, 0), (2, 1), (3, 2)]);
    }

    #[test]
    fn uniform_shift_detection() {
        let basis = ChargeBasis::from_charges(vec![0, 1, 1, 2]);
        let mut lower = CMatrix::zeros((4, 4));
        lower[[0, 1]] = C64::new(1.0, 0.0);
        lower[[1, 3]] = C64::new(2.0, 0.0);
        assert_eq!(basis.shift_of(&lower), Some(-1));
        lower[[1, 2]] = C64::new(1.0, 0.0);
        assert_eq!(basis.shift_of(&lower), None);
        assert_eq!(basis.shift_of(&CMatrix::zeros((4, 4))), Some(0));
    }
}
