// Copyright 2026 hybridq Contributors
// SPDX-License-Identifier: Apache-2.0

//! Composite Hilbert space of qubit ⊗ cavity ⊗ collective atomic modes.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, ONE, ZERO};

/// Thermal truncation tail tolerance.
pub const THERMAL_TAIL_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Subsystem {
    Qubit,
    Cavity,
    ModeI,
    ModeR,
    ModeS,
}

impl Subsystem {
    pub const ALL: [Subsystem; 5] = [
        Subsystem::Qubit,
        Subsystem::Cavity,
        Subsystem::ModeI,
        Subsystem::ModeR,
        Subsystem::ModeS,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Subsystem::Qubit => "qubit",
            Subsystem::Cavity => "cavity",
            Subsystem::ModeI => "mode_i",
            Subsystem::ModeR => "mode_r",
            Subsystem::ModeS => "mode_s",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.label() == label)
    }

    pub fn is_bosonic(self) -> bool {
        self != Subsystem::Qubit
    }
}

impl fmt::Display for Subsystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Bosonic truncation dimensions (n_max + 1).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Truncation {
    pub cavity: usize,
    pub mode_i: usize,
    pub mode_r: usize,
    pub mode_s: usize,
}

impl Default for Truncation {
    fn default() -> Self {
        Self {
            cavity: 6,
            mode_i: 4,
            mode_r: 4,
            mode_s: 4,
        }
    }
}

impl Truncation {
    pub fn dim(&self, sub: Subsystem) -> usize {
        match sub {
            Subsystem::Qubit => 2,
            Subsystem::Cavity => self.cavity,
            Subsystem::ModeI => self.mode_i,
            Subsystem::ModeR => self.mode_r,
            Subsystem::ModeS => self.mode_s,
        }
    }

    pub fn bumped(&self, by: usize) -> Self {
        Self {
            cavity: self.cavity + by,
            mode_i: self.mode_i + by,
            mode_r: self.mode_r + by,
            mode_s: self.mode_s + by,
        }
    }

    /// Raises the cavity dimension until the thermal tail meets tolerance.
    pub fn with_thermal_cavity(mut self, n_bar: f64) -> Self {
        while thermal_tail(n_bar, self.cavity) >= THERMAL_TAIL_TOLERANCE {
            self.cavity += 1;
        }
        self
    }
}

/// Ordered subsystem list with fixed basis indexing (last subsystem fastest).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpaceLayout {
    subsystems: Vec<(Subsystem, usize)>,
    strides: Vec<usize>,
    total_dim: usize,
}

impl SpaceLayout {
    pub fn new(subsystems: Vec<(Subsystem, usize)>) -> Result<Arc<Self>> {
        if subsystems.is_empty() {
            return Err(Error::InvalidDimension {
                dim: 0,
                reason: "layout has no subsystems",
            });
        }
        for (i, &(s, d)) in subsystems.iter().enumerate() {
            if subsystems[..i].iter().any(|&(t, _)| t == s) {
                return Err(Error::DuplicateSubsystem(s));
            }
            match s {
                Subsystem::Qubit if d != 2 => {
                    return Err(Error::InvalidDimension {
                        dim: d,
                        reason: "qubit must have dim 2",
                    })
                }
                _ if d < 2 => {
                    return Err(Error::InvalidDimension {
                        dim: d,
                        reason: "bosonic truncation needs dim >= 2",
                    })
                }
                _ => {}
            }
        }
        let mut strides = vec![1; subsystems.len()];
        for i in (0..subsystems.len() - 1).rev() {
            strides[i] = strides[i + 1] * subsystems[i + 1].1;
        }
        let total_dim = subsystems.iter().map(|&(_, d)| d).product();
        Ok(Arc::new(Self {
            subsystems,
            strides,
            total_dim,
        }))
    }

    /// Qubit, cavity and the three collective modes.
    pub fn full(trunc: &Truncation) -> Result<Arc<Self>> {
        Self::with(trunc, &Subsystem::ALL)
    }

    pub fn with(trunc: &Truncation, subs: &[Subsystem]) -> Result<Arc<Self>> {
        Self::new(subs.iter().map(|&s| (s, trunc.dim(s))).collect())
    }

    pub fn subsystems(&self) -> &[(Subsystem, usize)] {
        &self.subsystems
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn position(&self, sub: Subsystem) -> Option<usize> {
        self.subsystems.iter().position(|&(s, _)| s == sub)
    }

    pub fn contains(&self, sub: Subsystem) -> bool {
        self.position(sub).is_some()
    }

    pub fn require(&self, subs: &[Subsystem]) -> Result<()> {
        match subs.iter().find(|s| !self.contains(**s)) {
            Some(&s) => Err(Error::MissingSubsystem(s)),
            None => Ok(()),
        }
    }

    pub fn dim(&self, sub: Subsystem) -> Result<usize> {
        self.position(sub)
            .map(|p| self.subsystems[p].1)
            .ok_or(Error::MissingSubsystem(sub))
    }

    pub fn stride(&self, sub: Subsystem) -> Result<usize> {
        self.position(sub)
            .map(|p| self.strides[p])
            .ok_or(Error::MissingSubsystem(sub))
    }

    /// Basis index of the product state with the given occupations (layout order).
    pub fn index_of(&self, occupations: &[usize]) -> Result<usize> {
        if occupations.len() != self.subsystems.len() {
            return Err(Error::DimensionMismatch {
                expected: self.subsystems.len(),
                found: occupations.len(),
            });
        }
        let mut idx = 0;
        for ((&(s, d), &n), &stride) in self.subsystems.iter().zip(occupations).zip(&self.strides) {
            if n >= d {
                return Err(Error::OccupationOutOfRange {
                    subsystem: s,
                    occupation: n,
                    dim: d,
                });
            }
            idx += n * stride;
        }
        Ok(idx)
    }

    pub fn occupations(&self, mut index: usize) -> Vec<usize> {
        let mut occ = vec![0; self.subsystems.len()];
        for (i, &stride) in self.strides.iter().enumerate() {
            occ[i] = index / stride;
            index %= stride;
        }
        occ
    }

    /// Occupation of `sub` in every basis state, or `None` if absent.
    pub fn occupation_table(&self, sub: Subsystem) -> Option<Vec<usize>> {
        let p = self.position(sub)?;
        let (stride, d) = (self.strides[p], self.subsystems[p].1);
        Some((0..self.total_dim).map(|k| (k / stride) % d).collect())
    }

    /// Occupations as a map-like list in layout order, filling absent entries with 0.
    pub fn occupations_from(&self, spec: &[(Subsystem, usize)]) -> Vec<usize> {
        self.subsystems
            .iter()
            .map(|&(s, _)| {
                spec.iter()
                    .find(|(t, _)| *t == s)
                    .map(|&(_, n)| n)
                    .unwrap_or(0)
            })
            .collect()
    }
}

/// a[n−1, n] = √n.
pub fn annihilation(dim: usize) -> Result<CMatrix> {
    if dim < 2 {
        return Err(Error::InvalidDimension {
            dim,
            reason: "ladder operator needs dim >= 2",
        });
    }
    let mut a = Array2::zeros((dim, dim));
    for n in 1..dim {
        a[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
    }
    Ok(a)
}

pub fn creation(dim: usize) -> Result<CMatrix> {
    Ok(linalg::dagger(annihilation(dim)?.view()))
}

pub fn number(dim: usize) -> Result<CMatrix> {
    if dim < 2 {
        return Err(Error::InvalidDimension {
            dim,
            reason: "number operator needs dim >= 2",
        });
    }
    Ok(Array2::from_diag(&ndarray::Array1::from_iter(
        (0..dim).map(|n| C64::new(n as f64, 0.0)),
    )))
}

/// |0⟩⟨1| in the basis (|0⟩, |1⟩).
pub fn qubit_sigma_minus() -> CMatrix {
    ndarray::array![[ZERO, ONE], [ZERO, ZERO]]
}

pub fn qubit_sigma_plus() -> CMatrix {
    ndarray::array![[ZERO, ZERO], [ONE, ZERO]]
}

/// diag(−1, +1) in the basis (|0⟩, |1⟩).
pub fn qubit_sigma_z() -> CMatrix {
    ndarray::array![[-ONE, ZERO], [ZERO, ONE]]
}

/// Local number-like operator for any subsystem: σ⁺σ⁻ for the qubit.
pub fn local_number(sub: Subsystem, dim: usize) -> Result<CMatrix> {
    match sub {
        Subsystem::Qubit => Ok(qubit_sigma_plus().dot(&qubit_sigma_minus())),
        _ => number(dim),
    }
}

/// Dense operator on a composite space.
#[derive(Clone, Debug)]
pub struct Operator {
    matrix: CMatrix,
    layout: Arc<SpaceLayout>,
}

impl Operator {
    pub fn new(layout: Arc<SpaceLayout>, matrix: CMatrix) -> Result<Self> {
        let d = layout.total_dim();
        if matrix.dim() != (d, d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: matrix.nrows(),
            });
        }
        Ok(Self { matrix, layout })
    }

    pub fn zeros(layout: &Arc<SpaceLayout>) -> Self {
        let d = layout.total_dim();
        Self {
            matrix: Array2::zeros((d, d)),
            layout: layout.clone(),
        }
    }

    pub fn identity(layout: &Arc<SpaceLayout>) -> Self {
        Self {
            matrix: linalg::identity(layout.total_dim()),
            layout: layout.clone(),
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn layout(&self) -> &Arc<SpaceLayout> {
        &self.layout
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: linalg::dagger(self.matrix.view()),
            layout: self.layout.clone(),
        }
    }

    pub fn scaled(&self, w: f64) -> Self {
        Self {
            matrix: &self.matrix * w,
            layout: self.layout.clone(),
        }
    }

    pub fn hermiticity_residual(&self) -> f64 {
        linalg::hermiticity_residual(self.matrix.view())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_residual() <= tol
    }

    pub fn commutator(&self, other: &Operator) -> Operator {
        Self {
            matrix: linalg::commutator(self.matrix.view(), other.matrix.view()),
            layout: self.layout.clone(),
        }
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(self.matrix.view())
    }

    pub fn frobenius_norm(&self) -> f64 {
        linalg::frobenius_norm(self.matrix.view())
    }

    /// A + A†.
    pub fn plus_adjoint(&self) -> Self {
        let adj = self.adjoint();
        Self {
            matrix: &self.matrix + &adj.matrix,
            layout: self.layout.clone(),
        }
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator {
            matrix: &self.matrix + &rhs.matrix,
            layout: self.layout.clone(),
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator {
            matrix: &self.matrix - &rhs.matrix,
            layout: self.layout.clone(),
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator {
            matrix: self.matrix.dot(&rhs.matrix),
            layout: self.layout.clone(),
        }
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, w: f64) -> Operator {
        self.scaled(w)
    }
}

/// Kronecker embedding of `local` on `sub`, identities elsewhere.
pub fn embed(local: &CMatrix, sub: Subsystem, layout: &Arc<SpaceLayout>) -> Result<Operator> {
    embed_product(&[(sub, local)], layout)
}

/// Kronecker product of local factors on distinct subsystems, identities elsewhere.
pub fn embed_product(
    factors: &[(Subsystem, &CMatrix)],
    layout: &Arc<SpaceLayout>,
) -> Result<Operator> {
    for (i, (s, m)) in factors.iter().enumerate() {
        let d = layout.dim(*s)?;
        if m.dim() != (d, d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: m.nrows(),
            });
        }
        if factors[..i].iter().any(|(t, _)| t == s) {
            return Err(Error::DuplicateSubsystem(*s));
        }
    }
    let mut acc = linalg::identity(1);
    for &(s, d) in layout.subsystems() {
        let local = match factors.iter().find(|(t, _)| *t == s) {
            Some((_, m)) => (*m).clone(),
            None => linalg::identity(d),
        };
        acc = linalg::kron(acc.view(), local.view());
    }
    Operator::new(layout.clone(), acc)
}

/// Embedded ladder operator a on a bosonic subsystem (σ⁻ on the qubit).
pub fn lowering(sub: Subsystem, layout: &Arc<SpaceLayout>) -> Result<Operator> {
    let d = layout.dim(sub)?;
    let local = if sub == Subsystem::Qubit {
        qubit_sigma_minus()
    } else {
        annihilation(d)?
    };
    embed(&local, sub, layout)
}

pub fn number_operator(sub: Subsystem, layout: &Arc<SpaceLayout>) -> Result<Operator> {
    let d = layout.dim(sub)?;
    embed(&local_number(sub, d)?, sub, layout)
}

/// Tolerances of the density-matrix invariants.
#[derive(Clone, Copy, Debug)]
pub struct StateTolerance {
    pub hermiticity: f64,
    pub trace: f64,
    pub min_eigenvalue: f64,
}

impl Default for StateTolerance {
    fn default() -> Self {
        Self {
            hermiticity: 1e-10,
            trace: 1e-10,
            min_eigenvalue: -1e-7,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DensityMatrix {
    matrix: CMatrix,
    layout: Arc<SpaceLayout>,
}

impl DensityMatrix {
    /// Wraps a matrix without checking the state invariants; see [`Self::validate`].
    pub fn from_matrix(layout: Arc<SpaceLayout>, matrix: CMatrix) -> Result<Self> {
        let d = layout.total_dim();
        if matrix.dim() != (d, d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: matrix.nrows(),
            });
        }
        Ok(Self { matrix, layout })
    }

    pub fn pure(layout: Arc<SpaceLayout>, psi: &[C64]) -> Result<Self> {
        let d = layout.total_dim();
        if psi.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: psi.len(),
            });
        }
        let m = Array2::from_shape_fn((d, d), |(i, j)| psi[i] * psi[j].conj());
        Ok(Self { matrix: m, layout })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn matrix_mut(&mut self) -> &mut CMatrix {
        &mut self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn layout(&self) -> &Arc<SpaceLayout> {
        &self.layout
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(self.matrix.view())
    }

    /// tr ρ², assuming ρ Hermitian.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        linalg::hermiticity_residual(self.matrix.view())
    }

    /// λ_min ≥ −tol, checked by a shifted Cholesky factorization.
    pub fn is_positive_within(&self, tol: f64) -> bool {
        linalg::is_positive_shifted(self.matrix.view(), tol)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::hermitian_eigenvalues(self.matrix.view())[0]
    }

    pub fn expectation(&self, op: &Operator) -> C64 {
        let (m, a) = (&self.matrix, op.matrix());
        let d = m.nrows();
        let mut acc = ZERO;
        for i in 0..d {
            for j in 0..d {
                acc += a[[i, j]] * m[[j, i]];
            }
        }
        acc
    }

    /// ⟨n⟩ of a subsystem from the diagonal; 0 for an absent subsystem.
    pub fn mean_occupation(&self, sub: Subsystem) -> C64 {
        match self.layout.occupation_table(sub) {
            Some(table) => table
                .iter()
                .enumerate()
                .map(|(k, &n)| self.matrix[[k, k]] * n as f64)
                .sum(),
            None => ZERO,
        }
    }

    pub fn validate(&self, tol: &StateTolerance) -> Result<()> {
        let herm = self.hermiticity_residual();
        if herm > tol.hermiticity {
            return Err(Error::InvariantViolation {
                t: 0.0,
                what: "hermiticity residual",
                value: herm,
            });
        }
        let tr = self.trace();
        let drift = (tr - ONE).norm();
        if drift > tol.trace {
            return Err(Error::InvariantViolation {
                t: 0.0,
                what: "trace drift",
                value: drift,
            });
        }
        if !self.is_positive_within(-tol.min_eigenvalue) {
            let lam = self.min_eigenvalue();
            return Err(Error::InvariantViolation {
                t: 0.0,
                what: "min eigenvalue",
                value: lam,
            });
        }
        Ok(())
    }

    /// Reduced density matrix on `keep` (in layout order).
    pub fn partial_trace(&self, keep: &[Subsystem]) -> Result<DensityMatrix> {
        self.layout.require(keep)?;
        let subs = self.layout.subsystems();
        let kept: Vec<(Subsystem, usize)> = subs
            .iter()
            .copied()
            .filter(|(s, _)| keep.contains(s))
            .collect();
        let reduced = SpaceLayout::new(kept.clone())?;
        let dr = reduced.total_dim();
        let d = self.layout.total_dim();
        let kept_pos: Vec<usize> = kept
            .iter()
            .map(|(s, _)| self.layout.position(*s).unwrap())
            .collect();
        let traced_pos: Vec<usize> = (0..subs.len()).filter(|p| !kept_pos.contains(p)).collect();
        let reduced_index = |occ: &[usize]| -> usize {
            kept_pos.iter().fold(0, |acc, &p| acc * subs[p].1 + occ[p])
        };
        let mut out = Array2::zeros((dr, dr));
        let occs: Vec<Vec<usize>> = (0..d).map(|k| self.layout.occupations(k)).collect();
        for i in 0..d {
            for j in 0..d {
                if traced_pos.iter().all(|&p| occs[i][p] == occs[j][p]) {
                    out[[reduced_index(&occs[i]), reduced_index(&occs[j])]] += self.matrix[[i, j]];
                }
            }
        }
        DensityMatrix::from_matrix(reduced, out)
    }
}

/// Projector onto a product Fock state; occupations in layout order.
pub fn basis_state(layout: &Arc<SpaceLayout>, occupations: &[usize]) -> Result<DensityMatrix> {
    let idx = layout.index_of(occupations)?;
    let d = layout.total_dim();
    let mut m = Array2::zeros((d, d));
    m[[idx, idx]] = ONE;
    DensityMatrix::from_matrix(layout.clone(), m)
}

/// Truncated geometric distribution p_n ∝ n̄ⁿ/(1+n̄)^{n+1}, n < dim, unnormalized.
pub fn thermal_weights(n_bar: f64, dim: usize) -> Vec<f64> {
    let ratio = n_bar / (1.0 + n_bar);
    (0..dim)
        .map(|n| ratio.powi(n as i32) / (1.0 + n_bar))
        .collect()
}

/// Probability mass of the thermal distribution at n ≥ dim.
pub fn thermal_tail(n_bar: f64, dim: usize) -> f64 {
    if n_bar == 0.0 {
        return 0.0;
    }
    (n_bar / (1.0 + n_bar)).powi(dim as i32)
}

/// Thermal cavity ⊗ product basis state on the other subsystems.
///
/// `rest` gives occupations in layout order; its cavity entry is ignored.
pub fn thermal_cavity_state(
    layout: &Arc<SpaceLayout>,
    n_bar: f64,
    rest: &[usize],
) -> Result<DensityMatrix> {
    if !(n_bar >= 0.0) || !n_bar.is_finite() {
        return Err(Error::InvalidParameter {
            name: "n_bar",
            value: n_bar,
            reason: "must be >= 0",
        });
    }
    let cav_pos = layout
        .position(Subsystem::Cavity)
        .ok_or(Error::MissingSubsystem(Subsystem::Cavity))?;
    let dim = layout.subsystems()[cav_pos].1;
    let tail = thermal_tail(n_bar, dim);
    if tail >= THERMAL_TAIL_TOLERANCE {
        return Err(Error::TruncationTooSmall {
            dim,
            n_bar,
            tail,
            tolerance: THERMAL_TAIL_TOLERANCE,
        });
    }
    let weights = thermal_weights(n_bar, dim);
    let norm: f64 = weights.iter().sum();
    let d = layout.total_dim();
    let mut m = Array2::zeros((d, d));
    let mut occ = rest.to_vec();
    for (n, w) in weights.iter().enumerate() {
        occ[cav_pos] = n;
        let idx = layout.index_of(&occ)?;
        m[[idx, idx]] = C64::new(w / norm, 0.0);
    }
    DensityMatrix::from_matrix(layout.clone(), m)
}

/// Basis-state vector |occupations⟩.
pub fn basis_vector(layout: &Arc<SpaceLayout>, occupations: &[usize]) -> Result<Vec<C64>> {
    let idx = layout.index_of(occupations)?;
    let mut v = vec![ZERO; layout.total_dim()];
    v[idx] = ONE;
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_layout() -> Arc<SpaceLayout> {
        SpaceLayout::new(vec![
            (Subsystem::Qubit, 2),
            (Subsystem::Cavity, 3),
            (Subsystem::ModeR, 2),
        ])
        .unwrap()
    }

    #[test]
    fn annihilation_entries() {
        let a2 = annihilation(2).unwrap();
        assert_eq!(a2, ndarray::array![[ZERO, ONE], [ZERO, ZERO]]);
        let a3 = annihilation(3).unwrap();
        assert_eq!(a3[[0, 1]], ONE);
        assert!((a3[[1, 2]].re - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(a3.iter().filter(|z| **z != ZERO).count(), 2);
        assert!(matches!(
            annihilation(1),
            Err(Error::InvalidDimension { .. })
        ));
    }

    #[test]
    fn number_operator_identity() {
        let a = annihilation(4).unwrap();
        let n = linalg::dagger(a.view()).dot(&a);
        for k in 0..4 {
            assert!((n[[k, k]].re - k as f64).abs() < 1e-14);
        }
    }

    #[test]
    fn qubit_operators() {
        let sm = qubit_sigma_minus();
        let one = ndarray::array![ZERO, ONE];
        assert_eq!(sm.dot(&one), ndarray::array![ONE, ZERO]);
        let proj = qubit_sigma_plus().dot(&sm);
        assert_eq!(proj, ndarray::array![[ZERO, ZERO], [ZERO, ONE]]);
        let zero = ndarray::array![ONE, ZERO];
        assert_eq!(qubit_sigma_z().dot(&zero), ndarray::array![-ONE, ZERO]);
    }

    #[test]
    fn layout_rejects_bad_dims_and_duplicates() {
        assert!(SpaceLayout::new(vec![(Subsystem::Qubit, 3)]).is_err());
        assert!(SpaceLayout::new(vec![(Subsystem::Cavity, 1)]).is_err());
        assert!(matches!(
            SpaceLayout::new(vec![(Subsystem::Cavity, 2), (Subsystem::Cavity, 3)]),
            Err(Error::DuplicateSubsystem(Subsystem::Cavity))
        ));
        let l = SpaceLayout::full(&Truncation::default()).unwrap();
        assert_eq!(l.total_dim(), 2 * 6 * 4 * 4 * 4);
    }

    #[test]
    fn index_roundtrip() {
        let l = small_layout();
        for k in 0..l.total_dim() {
            assert_eq!(l.index_of(&l.occupations(k)).unwrap(), k);
        }
    }

    #[test]
    fn embed_identity_and_trace() {
        let l = small_layout();
        let id = embed(&linalg::identity(3), Subsystem::Cavity, &l).unwrap();
        assert_eq!(id.matrix(), &linalg::identity(12));
        let a = number(3).unwrap();
        let e = embed(&a, Subsystem::Cavity, &l).unwrap();
        assert!((e.trace().re - 3.0 * 4.0).abs() < 1e-12);
        assert!(matches!(
            embed(&a, Subsystem::ModeI, &l),
            Err(Error::MissingSubsystem(Subsystem::ModeI))
        ));
        assert!(matches!(
            embed(&a, Subsystem::ModeR, &l),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn embedded_spectrum_has_factor_multiplicity() {
        let l = small_layout();
        let h = ndarray::array![
            [C64::new(1.0, 0.0), C64::new(0.5, 0.5)],
            [C64::new(0.5, -0.5), C64::new(-2.0, 0.0)]
        ];
        let local_ev = linalg::hermitian_eigenvalues(h.view());
        let e = embed(&h, Subsystem::Qubit, &l).unwrap();
        assert!(e.is_hermitian(1e-14));
        let ev = linalg::hermitian_eigenvalues(e.matrix().view());
        assert_eq!(ev.len(), 12);
        for (k, x) in ev.iter().enumerate() {
            assert!((x - local_ev[k / 6]).abs() < 1e-12);
        }
    }

    #[test]
    fn basis_state_observables() {
        let l = small_layout();
        let vac = basis_state(&l, &[0, 0, 0]).unwrap();
        assert!((vac.trace() - ONE).norm() < 1e-15);
        vac.validate(&StateTolerance::default()).unwrap();
        let q = basis_state(&l, &[1, 0, 0]).unwrap();
        assert!((q.mean_occupation(Subsystem::Qubit).re - 1.0).abs() < 1e-15);
        let c = basis_state(&l, &[0, 1, 0]).unwrap();
        assert!((c.mean_occupation(Subsystem::Cavity).re - 1.0).abs() < 1e-15);
        assert!(matches!(
            basis_state(&l, &[0, 3, 0]),
            Err(Error::OccupationOutOfRange { .. })
        ));
    }

    #[test]
    fn thermal_state_properties() {
        let l = SpaceLayout::new(vec![(Subsystem::Qubit, 2), (Subsystem::Cavity, 13)]).unwrap();
        let vac = thermal_cavity_state(&l, 0.0, &[0, 0]).unwrap();
        assert!((vac.matrix()[[0, 0]] - ONE).norm() < 1e-15);
        let th = thermal_cavity_state(&l, 0.5, &[0, 0]).unwrap();
        th.validate(&StateTolerance::default()).unwrap();
        assert!((th.mean_occupation(Subsystem::Cavity).re - 0.5).abs() < 1e-4);
        let (p0, p1) = (th.matrix()[[0, 0]].re, th.matrix()[[1, 1]].re);
        assert!((p1 / p0 - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn thermal_state_rejects_short_truncation() {
        let l = SpaceLayout::new(vec![(Subsystem::Cavity, 10)]).unwrap();
        assert!(matches!(
            thermal_cavity_state(&l, 0.5, &[0]),
            Err(Error::TruncationTooSmall { .. })
        ));
        assert_eq!(
            Truncation {
                cavity: 6,
                ..Default::default()
            }
            .with_thermal_cavity(0.5)
            .cavity,
            13
        );
    }

    fn random_density(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
        let g = Array2::from_shape_fn((d, d), |_| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let m = g.dot(&linalg::dagger(g.view()));
        let tr = linalg::trace(m.view());
        m.mapv(|z| z / tr)
    }

    #[test]
    fn partial_trace_of_product_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let l = small_layout();
        let (a, b, c) = (
            random_density(&mut rng, 2),
            random_density(&mut rng, 3),
            random_density(&mut rng, 2),
        );
        let full = linalg::kron(linalg::kron(a.view(), b.view()).view(), c.view());
        let rho = DensityMatrix::from_matrix(l, full).unwrap();
        let ab = rho
            .partial_trace(&[Subsystem::Qubit, Subsystem::Cavity])
            .unwrap();
        let want = linalg::kron(a.view(), b.view());
        assert!(linalg::frobenius_norm((ab.matrix() - &want).view()) < 1e-13);
        let rc = rho.partial_trace(&[Subsystem::ModeR]).unwrap();
        assert!(linalg::frobenius_norm((rc.matrix() - &c).view()) < 1e-13);
        let ac = rho
            .partial_trace(&[Subsystem::Qubit, Subsystem::ModeR])
            .unwrap();
        let want = linalg::kron(a.view(), c.view());
        assert!(linalg::frobenius_norm((ac.matrix() - &want).view()) < 1e-13);
    }

    proptest! {
        #[test]
        fn disjoint_embeddings_commute(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let l = small_layout();
            let a = Array2::from_shape_fn((3, 3), |_| C64::new(rng.random(), rng.random()));
            let b = Array2::from_shape_fn((2, 2), |_| C64::new(rng.random(), rng.random()));
            let ea = embed(&a, Subsystem::Cavity, &l).unwrap();
            let eb = embed(&b, Subsystem::ModeR, &l).unwrap();
            prop_assert!(ea.commutator(&eb).frobenius_norm() < 1e-13);
        }

        #[test]
        fn thermal_ratio_is_geometric(n_bar in 0.01f64..2.0) {
            let dim = Truncation { cavity: 2, ..Default::default() }.with_thermal_cavity(n_bar).cavity;
            let l = SpaceLayout::new(vec![(Subsystem::Cavity, dim)]).unwrap();
            let th = thermal_cavity_state(&l, n_bar, &[0]).unwrap();
            let m = th.matrix();
            for n in 1..dim {
                prop_assert!((m[[n, n]].re / m[[n - 1, n - 1]].re - n_bar / (1.0 + n_bar)).abs() < 1e-12);
            }
            prop_assert!((th.mean_occupation(Subsystem::Cavity).re - n_bar).abs() < 1e-4);
        }
    }
}
