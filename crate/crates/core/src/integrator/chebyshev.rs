// Copyright 2026 hybridq Contributors
// SPDX-License-Identifier: Apache-2.0

//! Chebyshev expansion of e^{hL} for a constant generator.
//!
//! With M = L/W and z = hW, e^{hL} = Σ_k (2 − δ_k0) J_k(z) ψ_k where
//! ψ_0 = ρ, ψ_1 = Mρ and ψ_{k+1} = 2Mψ_k + ψ_{k−1}. The coefficients are real
//! and every ψ_k stays Hermitian.

use crate::linalg::{C64, ZERO};

use super::generator::Generator;

/// Bessel J_k(z), k = 0..=n_max, by Miller's backward recurrence normalized with
/// J_0 + 2Σ J_2k = 1.
pub fn bessel_j_sequence(z: f64, n_max: usize) -> Vec<f64> {
    if z == 0.0 {
        let mut v = vec![0.0; n_max + 1];
        v[0] = 1.0;
        return v;
    }
    let start = n_max.max(z.ceil() as usize) + 30 + (z.cbrt() * 10.0) as usize;
    let mut j = vec![0.0; start + 2];
    j[start] = 1e-300;
    for k in (1..=start).rev() {
        j[k - 1] = 2.0 * k as f64 / z * j[k] - j[k + 1];
        if j[k - 1].abs() > 1e250 {
            for v in j[k - 1..].iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let norm = j[0] + 2.0 * j.iter().skip(2).step_by(2).sum::<f64>();
    j.truncate(n_max + 1);
    j.iter().map(|v| v / norm).collect()
}

/// Coefficients (2 − δ_k0) J_k(z) up to the point where the tail drops below `tol`.
pub fn expansion_coefficients(z: f64, tol: f64) -> Vec<f64> {
    let n_max = (z * 1.2) as usize + 40 + (z.cbrt() * 12.0) as usize;
    let j = bessel_j_sequence(z, n_max);
    let mut n = j.len();
    let floor = z.ceil() as usize;
    while n > floor + 1 && j[n - 1].abs() < tol && j[n - 2].abs() < tol {
        n -= 1;
    }
    j[..n]
        .iter()
        .enumerate()
        .map(|(k, v)| if k == 0 { *v } else { 2.0 * v })
        .collect()
}

/// Largest z per sub-step.
pub const MAX_Z: f64 = 400.0;
/// Bessel tail tolerance relative to ‖ρ‖.
pub const SERIES_TOLERANCE: f64 = 1e-14;

/// Workspace buffers for repeated propagation on one dimension.
pub struct ChebyshevWorkspace {
    prev: Vec<C64>,
    cur: Vec<C64>,
    acc: Vec<C64>,
}

impl ChebyshevWorkspace {
    /// Buffers for states with `n` stored entries.
    pub fn new(n: usize) -> Self {
        Self {
            prev: vec![ZERO; n],
            cur: vec![ZERO; n],
            acc: vec![ZERO; n],
        }
    }
}

/// Outcome of a sub-step; `Diverged` means the width bound was too small.
pub enum StepOutcome {
    Done { applications: usize },
    Diverged,
}

/// ρ ← e^{hL} ρ for one sub-step with z = h·W ≤ MAX_Z.
pub fn step(gen: &Generator, rho: &mut [C64], h: f64, ws: &mut ChebyshevWorkspace) -> StepOutcome {
    let w = gen.spectral_width();
    let z = h * w;
    let coeffs = expansion_coefficients(z, SERIES_TOLERANCE);
    let norm0: f64 = rho.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let inv_w = 1.0 / w;

    ws.prev.copy_from_slice(rho);
    for (a, p) in ws.acc.iter_mut().zip(&ws.prev) {
        *a = *p * coeffs[0];
    }
    if coeffs.len() == 1 {
        rho.copy_from_slice(&ws.acc);
        return StepOutcome::Done { applications: 0 };
    }
    ws.cur.iter_mut().for_each(|v| *v = ZERO);
    gen.apply_add(&ws.prev, inv_w, &mut ws.cur);
    for (a, c) in ws.acc.iter_mut().zip(&ws.cur) {
        *a += *c * coeffs[1];
    }
    let mut applications = 1;
    for (k, &ck) in coeffs.iter().enumerate().skip(2) {
        // prev ← 2M·cur + prev, then swap so cur holds ψ_k.
        gen.apply_add(&ws.cur, 2.0 * inv_w, &mut ws.prev);
        std::mem::swap(&mut ws.prev, &mut ws.cur);
        applications += 1;
        for (a, c) in ws.acc.iter_mut().zip(&ws.cur) {
            *a += *c * ck;
        }
        if k % 16 == 0 {
            let n: f64 = ws.cur.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            if !(n <= 1e3 * norm0.max(f64::MIN_POSITIVE)) {
                return StepOutcome::Diverged;
            }
        }
    }
    rho.copy_from_slice(&ws.acc);
    StepOutcome::Done { applications }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_values() {
        // Reference values J_0(1), J_1(1), J_5(10), J_0(100).
        let j = bessel_j_sequence(1.0, 3);
        assert!((j[0] - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((j[1] - 0.440_050_585_744_933_5).abs() < 1e-15);
        let j = bessel_j_sequence(10.0, 6);
        assert!((j[5] - (-0.234_061_528_186_793_6)).abs() < 1e-14);
        let j = bessel_j_sequence(100.0, 2);
        assert!((j[0] - 0.019_985_850_304_223_12).abs() < 1e-14);
    }

    #[test]
    fn coefficients_reproduce_exponential_of_scalar() {
        // e^{-izx} = Σ (2−δ)(−i)^k J_k(z) T_k(x)
        for &(z, x) in &[(0.3, 0.2), (50.0, -0.7), (350.0, 0.99)] {
            let c = expansion_coefficients(z, 1e-15);
            let theta: f64 = f64::acos(x);
            let mut sum = C64::new(0.0, 0.0);
            let mut phase = C64::new(1.0, 0.0);
            for (k, ck) in c.iter().enumerate() {
                sum += phase * ck * (k as f64 * theta).cos();
                phase *= C64::new(0.0, -1.0);
            }
            let want = C64::new(0.0, -z * x).exp();
            assert!(
                (sum - want).norm() < 1e-12,
                "z={z} x={x} err={}",
                (sum - want).norm()
            );
        }
    }
}
