// Copyright 2026 hybridq Contributors
// SPDX-License-Identifier: Apache-2.0

//! Typed scenario runners. Each returns a result record; file output lives
//! in the parent module.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fidelity::{
    calibrate_phase_with, evaluate_transfer, initial_state, Calibration, CardinalState,
    FidelityReport, InputState, Readout,
};
use crate::hilbert::{basis_state, SpaceLayout, Subsystem, Truncation};
use crate::integrator::{propagate, Trajectory};
use crate::linalg::symmetric_eigenvalues;
use crate::model::{SystemParams, TransferModel};
use crate::params::{derive, temperature_for_ratio, thermal_occupation, DerivedParams};
use crate::pulses::{constant_schedule, reverse_protocol, three_step_protocol, PulseSchedule};

use super::config::ScenarioConfig;

/// Default n̄ of the thermal transfer run.
pub const THERMAL_N_BAR: f64 = 0.5;

/// Model, schedule and truncation of one transfer run.
#[derive(Clone, Debug)]
pub struct TransferSetup {
    pub params: SystemParams,
    pub truncation: Truncation,
    pub model: TransferModel,
    pub schedule: PulseSchedule,
}

pub fn transfer_setup(cfg: &ScenarioConfig, n_bar: f64) -> Result<TransferSetup> {
    let params = cfg.transfer_params(n_bar);
    let truncation = cfg.truncation_for(n_bar);
    let layout = SpaceLayout::full(&truncation)?;
    let model = TransferModel::rydberg(&params, &layout)?;
    let schedule = three_step_protocol(&params, &cfg.protocol_options())?;
    Ok(TransferSetup {
        params,
        truncation,
        model,
        schedule,
    })
}

/// Phase calibration on the zero-temperature truncation, shared by every run
/// of a configuration.
pub fn calibrate(cfg: &ScenarioConfig) -> Result<Calibration> {
    let setup = transfer_setup(cfg, 0.0)?;
    calibrate_phase_with(
        &setup.model,
        &setup.schedule,
        &cfg.integrator_config(),
        &InputState::cardinal(CardinalState::Plus),
        Readout::Storage,
        cfg.fidelity.calibration_floor,
    )
}

#[derive(Clone, Debug)]
pub struct TransferResult {
    pub n_bar: f64,
    pub setup: TransferSetup,
    pub report: FidelityReport,
}

impl TransferResult {
    pub fn error_probability(&self) -> f64 {
        self.report.error_probability()
    }

    pub fn mean_fidelity(&self) -> f64 {
        self.report.mean
    }

    /// Largest sampled value of a trajectory column in the |1⟩ run.
    pub fn peak(&self, column: &str) -> f64 {
        self.report
            .run(CardinalState::One)
            .and_then(|t| t.peak(column))
            .map(|(_, v)| v)
            .unwrap_or(f64::NAN)
    }
}

pub fn run_transfer(
    cfg: &ScenarioConfig,
    n_bar: f64,
    calibration: Calibration,
) -> Result<TransferResult> {
    let setup = transfer_setup(cfg, n_bar)?;
    let report = evaluate_transfer(
        &setup.model,
        &setup.schedule,
        &cfg.integrator_config(),
        n_bar,
        calibration,
        cfg.reconstruction(),
    )?;
    Ok(TransferResult {
        n_bar,
        setup,
        report,
    })
}

/// One row of the temperature sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub temperature: f64,
    pub ratio: f64,
    pub n_bar: f64,
    /// Conditional fidelities in `CardinalState::ALL` order.
    pub fidelities: [f64; 6],
    pub mean: f64,
}

impl SweepRow {
    fn from_report(temperature: f64, ratio: f64, n_bar: f64, report: &FidelityReport) -> Self {
        Self {
            temperature,
            ratio,
            n_bar,
            fidelities: CardinalState::ALL.map(|c| report.fidelity(c)),
            mean: report.mean,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        let mut v = vec![self.temperature, self.ratio, self.n_bar];
        v.extend(self.fidelities);
        v.push(self.mean);
        v
    }
}

/// Rows sorted by temperature.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Largest increase of F̄ between consecutive temperatures; ≤ 0 for a monotone curve.
    pub fn max_rise(&self) -> f64 {
        self.rows
            .windows(2)
            .map(|w| w[1].mean - w[0].mean)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `points` log-spaced values in [lo, hi].
pub fn log_grid(points: usize, lo: f64, hi: f64) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut grid: Vec<f64> = (0..points)
        .map(|k| (a + (b - a) * k as f64 / (points - 1) as f64).exp())
        .collect();
    grid[0] = lo;
    grid[points - 1] = hi;
    grid
}

pub fn sweep_point(cfg: &ScenarioConfig, ratio: f64, calibration: Calibration) -> Result<SweepRow> {
    let omega_c = derive(&cfg.chain_inputs())?.omega_c.value;
    let temperature = temperature_for_ratio(omega_c, ratio);
    let n_bar = thermal_occupation(omega_c, temperature);
    let result = run_transfer(cfg, n_bar, calibration)?;
    Ok(SweepRow::from_report(
        temperature,
        ratio,
        n_bar,
        &result.report,
    ))
}

/// Fidelities against k_BT/ħω_c at the given ratios.
pub fn fidelity_sweep(
    cfg: &ScenarioConfig,
    ratios: &[f64],
    calibration: Calibration,
) -> Result<SweepResult> {
    let mut rows = ratios
        .par_iter()
        .map(|&r| sweep_point(cfg, r, calibration))
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.temperature.total_cmp(&b.temperature));
    Ok(SweepResult { rows })
}

#[derive(Clone, Debug, PartialEq)]
pub struct QRow {
    pub quality_factor: f64,
    pub kappa: f64,
    pub fidelities: [f64; 6],
    pub mean: f64,
    pub error_probability: f64,
}

impl QRow {
    pub fn values(&self) -> Vec<f64> {
        let mut v = vec![self.quality_factor, self.kappa];
        v.extend(self.fidelities);
        v.push(self.mean);
        v.push(self.error_probability);
        v
    }
}

/// Configuration with the cavity loss scaled to quality factor `q`.
pub fn with_quality_factor(cfg: &ScenarioConfig, q: f64) -> ScenarioConfig {
    let mut out = cfg.clone();
    out.model.kappa = Some(cfg.kappa() * cfg.cavity.quality_factor / q);
    out
}

pub fn q_point(cfg: &ScenarioConfig, q: f64, calibration: Calibration) -> Result<QRow> {
    let scaled = with_quality_factor(cfg, q);
    let result = run_transfer(&scaled, 0.0, calibration)?;
    Ok(QRow {
        quality_factor: q,
        kappa: result.setup.params.kappa,
        fidelities: CardinalState::ALL.map(|c| result.report.fidelity(c)),
        mean: result.report.mean,
        error_probability: result.error_probability(),
    })
}

/// F̄ at zero temperature for Q from `q_max` down to `q_min`, log-spaced.
pub fn q_degradation_study(cfg: &ScenarioConfig, calibration: Calibration) -> Result<Vec<QRow>> {
    let q = &cfg.qsweep;
    let mut grid = log_grid(q.points, q.q_min, q.q_max);
    grid.reverse();
    grid.par_iter()
        .map(|&qf| q_point(cfg, qf, calibration))
        .collect()
}

#[derive(Clone, Debug)]
pub struct MagneticResult {
    pub params: SystemParams,
    pub tau_sg: f64,
    /// P(n_s = 1) at the end of the swap.
    pub survival: f64,
    /// First-order estimate κτ_sg.
    pub loss_estimate: f64,
    pub trajectory: Trajectory,
}

/// Photon in the cavity swapped into the ensemble by the magnetic coupling alone.
pub fn direct_magnetic(cfg: &ScenarioConfig) -> Result<MagneticResult> {
    let derived = derive(&cfg.chain_inputs())?;
    let rate = cfg.chain.magnetic_collective_rate;
    let params = SystemParams {
        eta_ac: rate / cfg.model.n_atoms.sqrt(),
        delta_ac: 0.0,
        kappa: derived.kappa_magnetic,
        n_bar: 0.0,
        ..cfg.base_params(0.0)
    };
    let t = &cfg.truncation;
    let layout = SpaceLayout::new(vec![
        (Subsystem::Cavity, t.cavity),
        (Subsystem::ModeS, t.mode_s),
    ])?;
    let model = TransferModel::magnetic(&params, &layout)?;
    let rho0 = basis_state(&layout, &layout.occupations_from(&[(Subsystem::Cavity, 1)]))?;
    let schedule = constant_schedule(derived.tau_sg, 0.0, 0.0, 0.0)?;
    let trajectory = propagate(&rho0, &schedule, &model, &cfg.integrator_config())?;
    let survival = stored_single(&trajectory, &layout)?;
    Ok(MagneticResult {
        params,
        tau_sg: derived.tau_sg,
        survival,
        loss_estimate: derived.loss_direct,
        trajectory,
    })
}

/// Population of the state with exactly one storage excitation and nothing else.
fn stored_single(traj: &Trajectory, layout: &std::sync::Arc<SpaceLayout>) -> Result<f64> {
    let idx = layout.index_of(&layout.occupations_from(&[(Subsystem::ModeS, 1)]))?;
    Ok(traj.final_state.matrix()[[idx, idx]].re)
}

#[derive(Clone, Debug)]
pub struct DispersiveResult {
    pub params: SystemParams,
    pub derived: DerivedParams,
    /// Storage detuning placing s on resonance with the dressed qubit.
    pub delta_s: f64,
    /// Half the minimal dressed splitting.
    pub swap_rate: f64,
    pub tau: f64,
    pub survival: f64,
    pub trajectory: Trajectory,
}

/// Single-excitation energies of qubit, cavity and s under the given storage detuning.
fn dressed_gap(detuning: f64, eta_qc: f64, coupling: f64, delta_s: f64) -> f64 {
    let h = ndarray::arr2(&[
        [detuning, -eta_qc, 0.0],
        [-eta_qc, 0.0, coupling],
        [0.0, coupling, delta_s],
    ]);
    let mut e = symmetric_eigenvalues(h);
    e.sort_by(f64::total_cmp);
    // The qubit-like and s-like levels sit on the far side of the cavity from zero.
    if detuning > 0.0 {
        e[2] - e[1]
    } else {
        e[1] - e[0]
    }
}

/// Golden-section search for the storage detuning of the avoided crossing.
fn resonant_storage_detuning(detuning: f64, eta_qc: f64, coupling: f64) -> f64 {
    let guess =
        detuning / 2.0 + detuning.signum() * (detuning * detuning / 4.0 + eta_qc * eta_qc).sqrt();
    let width = 20.0 * coupling.abs() * eta_qc.abs() / detuning.abs() + coupling.abs();
    let (mut a, mut b) = (guess - width, guess + width);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let f = |x| dressed_gap(detuning, eta_qc, coupling, x);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
        if (b - a).abs() <= 1e-12 * guess.abs() {
            break;
        }
    }
    (a + b) / 2.0
}

/// Qubit → s swap through a far-detuned cavity with the magnetic coupling.
///
/// Qubit dissipation is switched off: the run isolates the cavity-mediated loss.
pub fn dispersive_swap(cfg: &ScenarioConfig) -> Result<DispersiveResult> {
    let derived = derive(&cfg.chain_inputs())?;
    let eta_qc = cfg.model.eta_qc;
    let detuning = cfg.chain.detuning_ratio * eta_qc;
    let coupling = cfg.chain.magnetic_collective_rate;
    let delta_s = resonant_storage_detuning(detuning, eta_qc, coupling);
    let swap_rate = dressed_gap(detuning, eta_qc, coupling, delta_s) / 2.0;
    let tau = std::f64::consts::PI / (2.0 * swap_rate);
    let params = SystemParams {
        eta_ac: coupling / cfg.model.n_atoms.sqrt(),
        delta_ac: delta_s,
        delta_qc: detuning,
        kappa: derived.kappa_magnetic,
        n_bar: 0.0,
        gamma_1: 0.0,
        gamma_phi: 0.0,
        ..cfg.base_params(0.0)
    };
    let t = &cfg.truncation;
    let layout = SpaceLayout::new(vec![
        (Subsystem::Qubit, 2),
        (Subsystem::Cavity, t.cavity),
        (Subsystem::ModeS, t.mode_s),
    ])?;
    let model = TransferModel::magnetic(&params, &layout)?;
    let rho0 = basis_state(&layout, &layout.occupations_from(&[(Subsystem::Qubit, 1)]))?;
    let schedule = constant_schedule(tau, detuning, 0.0, 0.0)?;
    let trajectory = propagate(&rho0, &schedule, &model, &cfg.integrator_config())?;
    let survival = stored_single(&trajectory, &layout)?;
    Ok(DispersiveResult {
        params,
        derived,
        delta_s,
        swap_rate,
        tau,
        survival,
        trajectory,
    })
}

#[derive(Clone, Debug)]
pub struct RoundtripResult {
    pub calibration: Calibration,
    pub schedule: PulseSchedule,
    pub noiseless: FidelityReport,
    pub dissipative: FidelityReport,
}

/// Store then retrieve, scored on the qubit.
pub fn roundtrip(cfg: &ScenarioConfig) -> Result<RoundtripResult> {
    let setup = transfer_setup(cfg, 0.0)?;
    let opts = cfg.protocol_options();
    let schedule = setup
        .schedule
        .then(&reverse_protocol(&setup.params, &opts)?)?;
    let config = cfg.integrator_config();
    let plus = InputState::cardinal(CardinalState::Plus);
    let calibration =
        calibrate_phase_with(&setup.model, &schedule, &config, &plus, Readout::Qubit, 0.0)?;
    let noiseless_model = setup.model.without_dissipation();
    let method = cfg.reconstruction();
    let noiseless = evaluate_transfer(
        &noiseless_model,
        &schedule,
        &config,
        0.0,
        calibration,
        method,
    )?;
    let dissipative =
        evaluate_transfer(&setup.model, &schedule, &config, 0.0, calibration, method)?;
    Ok(RoundtripResult {
        calibration,
        schedule,
        noiseless,
        dissipative,
    })
}

/// Initial state of a transfer run, for callers that propagate by hand.
pub fn transfer_initial_state(
    setup: &TransferSetup,
    input: CardinalState,
    n_bar: f64,
) -> Result<crate::hilbert::DensityMatrix> {
    initial_state(&setup.model.layout, &InputState::cardinal(input), n_bar)
}

/// Wraps an error with the scenario it came from.
pub fn in_scenario<T>(scenario: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Scenario { .. } => e,
        other => Error::Scenario {
            scenario,
            source: Box::new(other),
        },
    })
}
