// Copyright 2026 hybridq Contributors
// SPDX-License-Identifier: Apache-2.0

//! Property checks that do not depend on any published number.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::fidelity::{CardinalState, InputState};
use crate::hilbert::{
    thermal_weights, DensityMatrix, Operator, SpaceLayout, Subsystem, Truncation,
};
use crate::integrator::{
    expm_oracle, max_abs_difference, propagate, sectors, IntegratorConfig, Method, PreparedModel,
    SampleGrid,
};
use crate::linalg::{self, CMatrix, C64};
use crate::model::{
    collapse_operators, CollapseOperator, HamiltonianSet, SystemParams, TransferModel,
};
use crate::pulses::{ControlValues, PulseSchedule};

use super::config::ScenarioConfig;
use super::scenarios::{self, calibrate, run_transfer};

/// Outcome of one property check.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Human-readable pass condition.
    pub bound: String,
    pub passed: bool,
}

impl Check {
    fn below(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound: format!("< {limit:e}"),
            passed: value < limit,
        }
    }

    fn above(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound: format!("> {limit}"),
            passed: value > limit,
        }
    }

    fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound: format!("in [{lo}, {hi}]"),
            passed: (lo..=hi).contains(&value),
        }
    }
}

/// Worst trace drift, Hermiticity residual and negative eigenvalue over a trajectory's samples.
fn invariant_checks(name: &str, traj: &crate::integrator::Trajectory) -> Vec<Check> {
    let s = &traj.final_state;
    let drift = traj
        .trace
        .iter()
        .map(|t| (t - 1.0).abs())
        .fold(0.0, f64::max);
    vec![
        Check::below(format!("{name}: trace drift"), drift, 1e-8),
        Check::below(
            format!("{name}: hermiticity"),
            s.hermiticity_residual(),
            1e-10,
        ),
        Check::below(
            format!("{name}: negativity"),
            (-s.min_eigenvalue()).max(0.0),
            1e-8,
        ),
    ]
}

/// Invariants of the |+⟩ run (the one with coherences) of every scenario model.
pub fn scenario_invariants(cfg: &ScenarioConfig, thermal_n_bar: f64) -> Result<Vec<Check>> {
    let config = IntegratorConfig {
        check_invariants: true,
        positivity_every: 1,
        ..cfg.integrator_config()
    };
    let mut checks = Vec::new();
    for (name, n_bar) in [("fig3_zero_temp", 0.0), ("fig3_thermal", thermal_n_bar)] {
        let setup = scenarios::transfer_setup(cfg, n_bar)?;
        let rho0 = scenarios::transfer_initial_state(&setup, CardinalState::Plus, n_bar)?;
        let traj = propagate(&rho0, &setup.schedule, &setup.model, &config)?;
        checks.extend(invariant_checks(name, &traj));
    }
    let mut checked = cfg.clone();
    checked.integrator.check_invariants = true;
    checked.integrator.positivity_every = 1;
    checks.extend(invariant_checks(
        "direct_magnetic",
        &scenarios::direct_magnetic(&checked)?.trajectory,
    ));
    checks.extend(invariant_checks(
        "dispersive_swap",
        &scenarios::dispersive_swap(&checked)?.trajectory,
    ));
    Ok(checks)
}

/// ‖𝓛ρ_th‖/κ for a thermal cavity under its own dissipator, through the propagation kernel.
pub fn thermal_stationarity(n_bar: f64) -> Result<Check> {
    let dim = 60;
    let layout = SpaceLayout::new(vec![(Subsystem::Cavity, dim)])?;
    let p = SystemParams {
        n_bar,
        ..SystemParams::default()
    };
    let model = TransferModel::assemble(
        &layout,
        vec![HamiltonianSet::empty(&layout)],
        collapse_operators(&p, &layout)?,
    )?;
    let weights = thermal_weights(n_bar, dim);
    let rho = CMatrix::from_diag(&ndarray::Array1::from_iter(
        weights.iter().map(|&w| C64::new(w, 0.0)),
    ));
    let prepared = PreparedModel::new(&model, 0);
    let pattern = prepared.pattern_for(&rho);
    let gen = prepared.generator(&pattern, &ControlValues::default())?;
    let out = gen.apply(&sectors::pack(prepared.basis(), &pattern, &rho));
    let residual = out.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() / p.kappa;
    Ok(Check::below(
        format!("thermal stationarity (n_bar = {n_bar})"),
        residual,
        1e-8,
    ))
}

fn random_complex(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
}

fn random_density(rng: &mut ChaCha8Rng, layout: &Arc<SpaceLayout>) -> Result<DensityMatrix> {
    let d = layout.total_dim();
    let g = CMatrix::from_shape_fn((d, d), |_| random_complex(rng));
    let m = g.dot(&linalg::dagger(g.view()));
    let tr = linalg::trace(m.view());
    DensityMatrix::from_matrix(layout.clone(), m.mapv(|z| z / tr))
}

/// Dense random Hermitian part and two dense jumps on qubit ⊗ cavity.
fn random_model(rng: &mut ChaCha8Rng, cavity: usize) -> Result<TransferModel> {
    let layout = SpaceLayout::new(vec![(Subsystem::Qubit, 2), (Subsystem::Cavity, cavity)])?;
    let d = layout.total_dim();
    let a = CMatrix::from_shape_fn((d, d), |_| random_complex(rng));
    let h = &a + &linalg::dagger(a.view());
    let hs = HamiltonianSet::from_static(Operator::new(layout.clone(), h)?);
    let collapse = (0..2)
        .map(|_| {
            Ok(CollapseOperator {
                label: "random",
                rate: 0.2 + rng.random::<f64>(),
                operator: Operator::new(
                    layout.clone(),
                    CMatrix::from_shape_fn((d, d), |_| random_complex(rng)),
                )?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    TransferModel::assemble(&layout, vec![hs], collapse)
}

/// Rydberg chain on a 32-dimensional space with strong dissipation in every channel.
fn small_rydberg() -> Result<TransferModel> {
    let p = SystemParams {
        kappa: 2e6,
        n_bar: 0.3,
        gamma_1: 3e6,
        gamma_phi: 2e6,
        gamma_r: 1e6,
        gamma_s: 5e5,
        ..SystemParams::default()
    }
    .resonance_compensated(true);
    TransferModel::rydberg(
        &p,
        &SpaceLayout::full(&Truncation {
            cavity: 2,
            mode_i: 2,
            mode_r: 2,
            mode_s: 2,
        })?,
    )
}

fn oracle_piecewise(
    rho0: &DensityMatrix,
    schedule: &PulseSchedule,
    model: &TransferModel,
) -> Result<DensityMatrix> {
    let mut rho = rho0.clone();
    for seg in schedule.segments() {
        rho = expm_oracle(
            &rho,
            &model.hamiltonian.at(&seg.controls),
            &model.collapse,
            seg.duration,
        )?;
    }
    Ok(rho)
}

/// Largest trace distance between the default integrator and the dense oracle.
pub fn oracle_agreement(seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = IntegratorConfig {
        samples: SampleGrid::Uniform(4),
        ..IntegratorConfig::default()
    };
    let mut worst: f64 = 0.0;
    for cavity in [2, 4, 8, 16] {
        let model = random_model(&mut rng, cavity)?;
        let rho0 = random_density(&mut rng, &model.layout)?;
        let schedule = PulseSchedule::from_durations(&[(
            0.5 + rng.random::<f64>(),
            ControlValues::default(),
        )])?;
        let got = propagate(&rho0, &schedule, &model, &config)?.final_state;
        let want = oracle_piecewise(&rho0, &schedule, &model)?;
        worst = worst.max(linalg::trace_distance(
            got.matrix().view(),
            want.matrix().view(),
        ));
    }
    let model = small_rydberg()?;
    let rho0 = random_density(&mut rng, &model.layout)?;
    let w = 2.0 * PI;
    let schedule = PulseSchedule::from_durations(&[
        (4e-9, ControlValues::from_angular(0.0, 0.0, 0.0)),
        (15e-9, ControlValues::from_angular(w * 1e9, w * 3.85e3, 0.0)),
        (12e-9, ControlValues::from_angular(w * 1e9, 0.0, w * 2.5e7)),
    ])?;
    let got = propagate(&rho0, &schedule, &model, &config)?.final_state;
    let want = oracle_piecewise(&rho0, &schedule, &model)?;
    worst = worst.max(linalg::trace_distance(
        got.matrix().view(),
        want.matrix().view(),
    ));
    Ok(Check::below("expm oracle trace distance", worst, 1e-6))
}

/// err(h)/err(h/2) of fixed-step RK4 against the oracle.
pub fn rk4_convergence(seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = random_model(&mut rng, 2)?;
    let rho0 = random_density(&mut rng, &model.layout)?;
    let schedule = PulseSchedule::from_durations(&[(1.0, ControlValues::default())])?;
    let want = oracle_piecewise(&rho0, &schedule, &model)?;
    let err = |step: f64| -> Result<f64> {
        let cfg = IntegratorConfig {
            method: Method::Rk4 { step },
            samples: SampleGrid::Uniform(1),
            ..IntegratorConfig::default()
        };
        Ok(max_abs_difference(
            propagate(&rho0, &schedule, &model, &cfg)?
                .final_state
                .matrix(),
            want.matrix(),
        ))
    };
    Ok(Check::within(
        "rk4 convergence factor",
        err(0.02)? / err(0.01)?,
        8.0,
        32.0,
    ))
}

/// Noiseless store-and-retrieve fidelities.
pub fn roundtrip_check(cfg: &ScenarioConfig) -> Result<Vec<Check>> {
    let r = scenarios::roundtrip(cfg)?;
    let worst = r
        .noiseless
        .per_state
        .iter()
        .map(|&(_, f)| f)
        .fold(1.0, f64::min);
    Ok(vec![
        Check::above("noiseless roundtrip min fidelity", worst, 0.99),
        Check::above("noiseless roundtrip mean fidelity", r.noiseless.mean, 0.99),
    ])
}

/// Six-state mean versus a Monte Carlo Bloch-sphere average of the same map.
pub fn two_design_check(cfg: &ScenarioConfig, samples: usize, seed: u64) -> Result<Check> {
    let result = run_transfer(cfg, 0.0, calibrate(cfg)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta = result.report.calibration.theta_cal;
    let values = (0..samples)
        .map(|_| {
            result.report.map.fidelity(
                &InputState::from_uniform(rng.random(), rng.random())?,
                theta,
            )
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    let z = (result.report.mean - mean).abs() / se;
    Ok(Check::below(
        "six-state vs Monte Carlo mean (standard errors)",
        z,
        2.0,
    ))
}

/// Change of the zero-temperature F̄ and P_err when every truncation grows by one.
pub fn truncation_check(cfg: &ScenarioConfig) -> Result<Check> {
    let calibration = calibrate(cfg)?;
    let base = run_transfer(cfg, 0.0, calibration)?;
    let mut bumped = cfg.clone();
    let t = cfg.truncation_for(0.0).bumped(1);
    bumped.truncation.cavity = t.cavity;
    bumped.truncation.mode_i = t.mode_i;
    bumped.truncation.mode_r = t.mode_r;
    bumped.truncation.mode_s = t.mode_s;
    let big = run_transfer(&bumped, 0.0, calibration)?;
    let change = (big.report.mean - base.report.mean)
        .abs()
        .max((big.error_probability() - base.error_probability()).abs());
    Ok(Check::below("truncation bump change", change, 1e-3))
}

/// Every property check; `thermal_n_bar` sets the thermal invariant run.
pub fn run_suite(cfg: &ScenarioConfig, thermal_n_bar: f64) -> Result<Vec<Check>> {
    let mut checks = scenario_invariants(cfg, thermal_n_bar)?;
    checks.push(thermal_stationarity(thermal_n_bar)?);
    checks.push(oracle_agreement(1)?);
    checks.push(rk4_convergence(17)?);
    checks.extend(roundtrip_check(cfg)?);
    checks.push(two_design_check(cfg, 2000, 7)?);
    checks.push(truncation_check(cfg)?);
    Ok(checks)
}
