// Copyright 2026 hybridq Contributors
// SPDX-License-Identifier: Apache-2.0

//! Explicit Runge–Kutta steppers on flattened density matrices.

use crate::error::{Error, Result};
use crate::linalg::{C64, ZERO};

use super::generator::Generator;

/// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

pub struct RkWorkspace {
    k: Vec<Vec<C64>>,
    stage: Vec<C64>,
    /// Step size carried between calls.
    pub h: Option<f64>,
}

impl RkWorkspace {
    /// Buffers for states with `n` stored entries.
    pub fn new(n: usize) -> Self {
        Self {
            k: vec![vec![ZERO; n]; 7],
            stage: vec![ZERO; n],
            h: None,
        }
    }
}

fn eval(gen: &Generator, x: &[C64], out: &mut [C64]) {
    out.iter_mut().for_each(|v| *v = ZERO);
    gen.apply_add(x, 1.0, out);
}

/// Adaptive tolerances.
#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
    pub max_step: f64,
}

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

/// Integrates y from `t0` to `t_end` with Dormand–Prince; returns the number of
/// generator evaluations. The final step is clipped to land on the end.
pub fn dopri45(
    gen: &Generator,
    y: &mut [C64],
    t0: f64,
    t_end: f64,
    tol: &Tolerances,
    ws: &mut RkWorkspace,
    mut on_step: impl FnMut(f64, f64),
) -> Result<usize> {
    let duration = t_end - t0;
    let mut t = t0;
    let mut h =
        ws.h.unwrap_or_else(|| (1.0 / gen.spectral_width().max(1.0)).min(duration));
    h = h.min(tol.max_step);
    let mut evals = 0;
    let mut have_k0 = false;
    while t < t_end {
        let remaining = t_end - t;
        let last = h >= remaining;
        let hs = if last { remaining } else { h };
        if hs <= f64::EPSILON * t.abs().max(duration) {
            return Err(Error::StepSizeUnderflow { t, h: hs });
        }
        let (k, stage) = (&mut ws.k, &mut ws.stage);
        if !have_k0 {
            eval(gen, y, &mut k[0]);
            evals += 1;
        }
        for s in 1..7 {
            for (idx, st) in stage.iter_mut().enumerate() {
                let mut acc = y[idx];
                for (j, a) in A[s][..s].iter().enumerate() {
                    if *a != 0.0 {
                        acc += k[j][idx] * (hs * a);
                    }
                }
                *st = acc;
            }
            eval(gen, stage, &mut k[s]);
            evals += 1;
        }
        // Stage 7 is evaluated at the 5th-order solution, which is now in `stage`.
        let mut err: f64 = 0.0;
        for idx in 0..y.len() {
            let mut e = ZERO;
            for j in 0..7 {
                let db = B5[j] - B4[j];
                if db != 0.0 {
                    e += k[j][idx] * (hs * db);
                }
            }
            let sc = tol.abs + tol.rel * y[idx].norm().max(stage[idx].norm());
            err = err.max(e.norm() / sc);
        }
        if !err.is_finite() {
            return Err(Error::StepSizeUnderflow { t, h: hs });
        }
        if err <= 1.0 {
            let t_next = if last { t_end } else { t + hs };
            on_step(t, t_next);
            t = t_next;
            y.copy_from_slice(stage);
            // First same as last: stage 7 was evaluated at the accepted solution.
            k.swap(0, 6);
            have_k0 = true;
            let factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            h = if last {
                h.max(hs * factor)
            } else {
                hs * factor
            }
            .min(tol.max_step);
        } else {
            h = hs * (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
            // k[0] still valid for y.
            have_k0 = true;
        }
    }
    ws.h = Some(h);
    Ok(evals)
}

/// Classic fixed-step RK4 from `t0` to `t_end` with n = ceil(duration/step)
/// equal sub-steps.
pub fn rk4(
    gen: &Generator,
    y: &mut [C64],
    t0: f64,
    t_end: f64,
    step: f64,
    ws: &mut RkWorkspace,
    mut on_step: impl FnMut(f64, f64),
) -> usize {
    let duration = t_end - t0;
    let n = (duration / step).ceil().max(1.0) as usize;
    let h = duration / n as f64;
    let (k, stage) = (&mut ws.k, &mut ws.stage);
    for i in 0..n {
        eval(gen, y, &mut k[0]);
        for (s, v) in stage.iter_mut().enumerate() {
            *v = y[s] + k[0][s] * (0.5 * h);
        }
        eval(gen, stage, &mut k[1]);
        for (s, v) in stage.iter_mut().enumerate() {
            *v = y[s] + k[1][s] * (0.5 * h);
        }
        eval(gen, stage, &mut k[2]);
        for (s, v) in stage.iter_mut().enumerate() {
            *v = y[s] + k[2][s] * h;
        }
        eval(gen, stage, &mut k[3]);
        for (s, v) in y.iter_mut().enumerate() {
            *v += (k[0][s] + (k[1][s] + k[2][s]) * 2.0 + k[3][s]) * (h / 6.0);
        }
        let ta = t0 + i as f64 * h;
        on_step(
            ta,
            if i + 1 == n {
                t_end
            } else {
                t0 + (i + 1) as f64 * h
            },
        );
    }
    4 * n
}
