// Copyright 2026 hybridq Contributors
// SPDX-License-Identifier: Apache-2.0

//! Conditional and mean transfer fidelities with target-phase calibration.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{
    thermal_tail, thermal_weights, DensityMatrix, SpaceLayout, Subsystem, THERMAL_TAIL_TOLERANCE,
};
use crate::integrator::{propagate, IntegratorConfig, PreparedModel, Trajectory};
use crate::linalg::{self, CMatrix, ONE, ZERO};
use crate::model::TransferModel;
use crate::pulses::PulseSchedule;

/// Normalization tolerance of input amplitudes.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;
/// Minimum noiseless fidelity accepted after phase calibration.
pub const CALIBRATION_FLOOR: f64 = 0.999;

/// The six Pauli eigenstates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CardinalState {
    Zero,
    One,
    Plus,
    Minus,
    PlusI,
    MinusI,
}

impl CardinalState {
    pub const ALL: [CardinalState; 6] = [
        CardinalState::Zero,
        CardinalState::One,
        CardinalState::Plus,
        CardinalState::Minus,
        CardinalState::PlusI,
        CardinalState::MinusI,
    ];

    pub fn label(self) -> &'static str {
        match self {
            CardinalState::Zero => "0",
            CardinalState::One => "1",
            CardinalState::Plus => "+",
            CardinalState::Minus => "-",
            CardinalState::PlusI => "+i",
            CardinalState::MinusI => "-i",
        }
    }

    /// Column-friendly name, e.g. `plus_i`.
    pub fn column(self) -> &'static str {
        match self {
            CardinalState::Zero => "0",
            CardinalState::One => "1",
            CardinalState::Plus => "plus",
            CardinalState::Minus => "minus",
            CardinalState::PlusI => "plus_i",
            CardinalState::MinusI => "minus_i",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.label() == label || c.column() == label)
    }

    fn amplitudes(self) -> (C64, C64) {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        match self {
            CardinalState::Zero => (ONE, ZERO),
            CardinalState::One => (ZERO, ONE),
            CardinalState::Plus => (h, h),
            CardinalState::Minus => (h, -h),
            CardinalState::PlusI => (h, C64::new(0.0, FRAC_1_SQRT_2)),
            CardinalState::MinusI => (h, C64::new(0.0, -FRAC_1_SQRT_2)),
        }
    }
}

impl fmt::Display for CardinalState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Qubit input α|0⟩ + β|1⟩.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InputState {
    cardinal: Option<CardinalState>,
    alpha: C64,
    beta: C64,
}

impl InputState {
    pub fn new(alpha: C64, beta: C64) -> Result<Self> {
        let norm = alpha.norm_sqr() + beta.norm_sqr();
        if !((norm - 1.0).abs() <= NORMALIZATION_TOLERANCE) {
            return Err(Error::InvalidInputState(format!("|α|²+|β|² = {norm}")));
        }
        Ok(Self {
            cardinal: None,
            alpha,
            beta,
        })
    }

    pub fn cardinal(c: CardinalState) -> Self {
        let (alpha, beta) = c.amplitudes();
        Self {
            cardinal: Some(c),
            alpha,
            beta,
        }
    }

    /// cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩.
    pub fn bloch(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() {
            return Err(Error::InvalidInputState(format!(
                "Bloch angles ({theta}, {phi})"
            )));
        }
        let beta = C64::from_polar((theta / 2.0).sin(), phi);
        Self::new(C64::new((theta / 2.0).cos(), 0.0), beta)
    }

    /// Uniform point on the Bloch sphere from two uniforms in [0, 1).
    pub fn from_uniform(u: f64, v: f64) -> Result<Self> {
        Self::bloch((1.0 - 2.0 * u).clamp(-1.0, 1.0).acos(), 2.0 * PI * v)
    }

    pub fn label(&self) -> Option<CardinalState> {
        self.cardinal
    }

    pub fn alpha(&self) -> C64 {
        self.alpha
    }

    pub fn beta(&self) -> C64 {
        self.beta
    }

    /// 2×2 density matrix, index 0 = |0⟩.
    pub fn qubit_matrix(&self) -> [[C64; 2]; 2] {
        let (a, b) = (self.alpha, self.beta);
        [[a * a.conj(), a * b.conj()], [b * a.conj(), b * b.conj()]]
    }
}

impl fmt::Display for InputState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.cardinal {
            Some(c) => write!(f, "|{c}⟩"),
            None => write!(f, "{}|0⟩ + {}|1⟩", self.alpha, self.beta),
        }
    }
}

/// Where the ideal transfer leaves the excitation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Readout {
    /// One quantum in the storage mode s (the forward protocol).
    Storage,
    /// The qubit excited state (after store and retrieve).
    Qubit,
}

impl Readout {
    fn excited(self) -> (Subsystem, usize) {
        match self {
            Readout::Storage => (Subsystem::ModeS, 1),
            Readout::Qubit => (Subsystem::Qubit, 1),
        }
    }
}

/// Ideal stored state α|vac⟩ + β e^{iθ_cal}|n_s = 1⟩ on the full layout.
#[derive(Clone, Debug)]
pub struct TargetState {
    layout: Arc<SpaceLayout>,
    vector: Vec<C64>,
    theta_cal: f64,
    vacuum: usize,
    stored: usize,
}

impl TargetState {
    pub fn new(layout: &Arc<SpaceLayout>, input: &InputState, theta_cal: f64) -> Result<Self> {
        Self::for_readout(layout, input, theta_cal, Readout::Storage)
    }

    /// α|vac⟩ + β e^{iθ_cal}|excited⟩ for the given readout.
    pub fn for_readout(
        layout: &Arc<SpaceLayout>,
        input: &InputState,
        theta_cal: f64,
        readout: Readout,
    ) -> Result<Self> {
        let (sub, n) = readout.excited();
        layout.require(&[sub])?;
        let vacuum = layout.index_of(&layout.occupations_from(&[]))?;
        let stored = layout.index_of(&layout.occupations_from(&[(sub, n)]))?;
        let mut vector = vec![ZERO; layout.total_dim()];
        vector[vacuum] = input.alpha;
        vector[stored] = input.beta * C64::from_polar(1.0, theta_cal);
        Ok(Self {
            layout: layout.clone(),
            vector,
            theta_cal,
            vacuum,
            stored,
        })
    }

    pub fn vector(&self) -> &[C64] {
        &self.vector
    }

    pub fn theta_cal(&self) -> f64 {
        self.theta_cal
    }

    pub fn layout(&self) -> &Arc<SpaceLayout> {
        &self.layout
    }
}

/// F_ψ = ⟨ψ_a|ρ|ψ_a⟩.
pub fn conditional_fidelity(rho: &DensityMatrix, target: &TargetState) -> Result<f64> {
    let d = target.layout.total_dim();
    if rho.layout().total_dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: rho.layout().total_dim(),
        });
    }
    // The target has two nonzero amplitudes, so only a 2×2 block of ρ enters.
    let m = rho.matrix();
    let idx = [target.vacuum, target.stored];
    let mut f = ZERO;
    for &r in &idx {
        for &c in &idx {
            f += target.vector[r].conj() * m[[r, c]] * target.vector[c];
        }
    }
    Ok(f.re.clamp(0.0, 1.0))
}

/// Unweighted average over the six cardinal states.
pub fn mean_fidelity(per_state: &[(CardinalState, f64)]) -> Result<f64> {
    let mut sum = 0.0;
    for c in CardinalState::ALL {
        let f = per_state
            .iter()
            .find(|(s, _)| *s == c)
            .ok_or(Error::MissingState(c.label()))?
            .1;
        sum += f;
    }
    Ok(sum / 6.0)
}

/// Qubit input ⊗ thermal cavity ⊗ vacuum on every other subsystem.
pub fn initial_state(
    layout: &Arc<SpaceLayout>,
    input: &InputState,
    n_bar: f64,
) -> Result<DensityMatrix> {
    if !(n_bar >= 0.0) || !n_bar.is_finite() {
        return Err(Error::InvalidParameter {
            name: "n_bar",
            value: n_bar,
            reason: "must be >= 0",
        });
    }
    layout.require(&[Subsystem::Qubit, Subsystem::Cavity])?;
    let dim = layout.dim(Subsystem::Cavity)?;
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
    let q = input.qubit_matrix();
    let d = layout.total_dim();
    let mut m = Array2::zeros((d, d));
    for (n, w) in weights.iter().enumerate() {
        let at = |qb: usize| {
            layout.index_of(
                &layout.occupations_from(&[(Subsystem::Qubit, qb), (Subsystem::Cavity, n)]),
            )
        };
        for a in 0..2 {
            for b in 0..2 {
                m[[at(a)?, at(b)?]] = q[a][b] * (w / norm);
            }
        }
    }
    DensityMatrix::from_matrix(layout.clone(), m)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Calibration {
    pub theta_cal: f64,
    pub noiseless_fidelity: f64,
    pub readout: Readout,
}

/// Phase maximizing ⟨ψ_a(θ)|ρ|ψ_a(θ)⟩ over θ, in closed form.
pub fn optimal_phase(rho: &DensityMatrix, input: &InputState, readout: Readout) -> Result<f64> {
    let probe = TargetState::for_readout(rho.layout(), input, 0.0, readout)?;
    // F(θ) = const + 2 Re(α* β e^{iθ} ρ_gs), maximal at θ = −arg(α* β ρ_gs).
    let coherence = input.alpha.conj() * input.beta * rho.matrix()[[probe.vacuum, probe.stored]];
    if coherence.norm() == 0.0 {
        return Ok(0.0);
    }
    Ok(-coherence.arg())
}

/// Runs the protocol without dissipation on `input` (an equatorial state),
/// with the cavity in vacuum, and fixes θ_cal from the result.
pub fn calibrate_phase_with(
    model: &TransferModel,
    schedule: &PulseSchedule,
    config: &IntegratorConfig,
    input: &InputState,
    readout: Readout,
    floor: f64,
) -> Result<Calibration> {
    let noiseless = model.without_dissipation();
    let rho0 = initial_state(&noiseless.layout, input, 0.0)?;
    let traj = propagate(&rho0, schedule, &noiseless, config)?;
    let theta_cal = optimal_phase(&traj.final_state, input, readout)?;
    let target = TargetState::for_readout(&noiseless.layout, input, theta_cal, readout)?;
    let fidelity = conditional_fidelity(&traj.final_state, &target)?;
    if !(fidelity >= floor) {
        return Err(Error::Calibration { fidelity, floor });
    }
    Ok(Calibration {
        theta_cal,
        noiseless_fidelity: fidelity,
        readout,
    })
}

/// Calibration on |+⟩ with the default floor.
pub fn calibrate_phase(
    model: &TransferModel,
    schedule: &PulseSchedule,
    config: &IntegratorConfig,
) -> Result<Calibration> {
    let plus = InputState::cardinal(CardinalState::Plus);
    calibrate_phase_with(
        model,
        schedule,
        config,
        &plus,
        Readout::Storage,
        CALIBRATION_FLOOR,
    )
}

/// How the channel acting on the qubit input is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reconstruction {
    /// Runs |0⟩, |1⟩ and |+⟩; the coherence is read off the Q − Q' = −1 blocks
    /// of the |+⟩ output. Needs an excitation-conserving model.
    ChargeSectors,
    /// Runs |0⟩, |1⟩, |+⟩ and |+i⟩ and solves the linear system.
    FourState,
    /// Runs each of the six cardinal states.
    Direct,
}

/// The transfer channel restricted to qubit inputs, as
/// ρ_out = |α|²E₀₀ + |β|²E₁₁ + αβ*E₀₁ + α*βE₀₁†.
#[derive(Clone, Debug)]
pub struct TransferMap {
    layout: Arc<SpaceLayout>,
    readout: Readout,
    e00: CMatrix,
    e11: CMatrix,
    e01: CMatrix,
}

impl TransferMap {
    pub fn output(&self, input: &InputState) -> Result<DensityMatrix> {
        let (a, b) = (input.alpha, input.beta);
        let mut m = self.e00.mapv(|z| z * a.norm_sqr());
        m.scaled_add(C64::new(b.norm_sqr(), 0.0), &self.e11);
        m.scaled_add(a * b.conj(), &self.e01);
        m.scaled_add(a.conj() * b, &linalg::dagger(self.e01.view()));
        DensityMatrix::from_matrix(self.layout.clone(), m)
    }

    pub fn fidelity(&self, input: &InputState, theta_cal: f64) -> Result<f64> {
        let target = TargetState::for_readout(&self.layout, input, theta_cal, self.readout)?;
        conditional_fidelity(&self.output(input)?, &target)
    }
}

/// One physical protocol run.
#[derive(Clone, Debug)]
pub struct FidelityRun {
    pub input: CardinalState,
    pub trajectory: Trajectory,
}

#[derive(Clone, Debug)]
pub struct FidelityReport {
    pub calibration: Calibration,
    pub per_state: Vec<(CardinalState, f64)>,
    pub mean: f64,
    pub runs: Vec<FidelityRun>,
    pub map: TransferMap,
    /// Largest |F_reconstructed − F_run| over inputs run but not used to build the map.
    pub linearity_residual: Option<f64>,
}

impl FidelityReport {
    pub fn fidelity(&self, c: CardinalState) -> f64 {
        self.per_state
            .iter()
            .find(|(s, _)| *s == c)
            .map(|&(_, f)| f)
            .unwrap_or(f64::NAN)
    }

    /// Error probability P_err = 1 − F_1.
    pub fn error_probability(&self) -> f64 {
        1.0 - self.fidelity(CardinalState::One)
    }

    pub fn run(&self, c: CardinalState) -> Option<&Trajectory> {
        self.runs
            .iter()
            .find(|r| r.input == c)
            .map(|r| &r.trajectory)
    }
}

fn respects_charge(model: &TransferModel) -> bool {
    PreparedModel::new(model, 0).basis().n_sectors() > 1
}

/// Runs the inputs required by `method`, builds the transfer map and the six
/// conditional fidelities against the calibrated target.
pub fn evaluate_transfer(
    model: &TransferModel,
    schedule: &PulseSchedule,
    config: &IntegratorConfig,
    n_bar: f64,
    calibration: Calibration,
    method: Reconstruction,
) -> Result<FidelityReport> {
    use CardinalState::*;
    let method = match method {
        Reconstruction::ChargeSectors if !respects_charge(model) => Reconstruction::FourState,
        m => m,
    };
    let inputs: Vec<CardinalState> = match method {
        Reconstruction::ChargeSectors => vec![Zero, One, Plus],
        Reconstruction::FourState => vec![Zero, One, Plus, PlusI],
        Reconstruction::Direct => CardinalState::ALL.to_vec(),
    };
    let runs: Vec<FidelityRun> = inputs
        .par_iter()
        .map(|&c| {
            let rho0 = initial_state(&model.layout, &InputState::cardinal(c), n_bar)?;
            Ok(FidelityRun {
                input: c,
                trajectory: propagate(&rho0, schedule, model, config)?,
            })
        })
        .collect::<Result<_>>()?;
    let out = |c: CardinalState| {
        runs.iter()
            .find(|r| r.input == c)
            .map(|r| r.trajectory.final_state.matrix())
            .unwrap()
    };
    let (e00, e11) = (out(Zero).clone(), out(One).clone());
    let e01 = match method {
        Reconstruction::ChargeSectors => {
            let basis = PreparedModel::new(model, 0).basis().clone();
            let plus = out(Plus);
            CMatrix::from_shape_fn(plus.dim(), |(r, c)| {
                if basis.charge(r) as isize - basis.charge(c) as isize == -1 {
                    plus[[r, c]] * 2.0
                } else {
                    ZERO
                }
            })
        }
        _ => {
            // A = E₀₁ + E₁₀ from |+⟩, B = i(E₁₀ − E₀₁) from |+i⟩; E₀₁ = (A + iB)/2.
            let mix = &e00 + &e11;
            let a = out(Plus).mapv(|z| z * 2.0) - &mix;
            let b = out(PlusI).mapv(|z| z * 2.0) - &mix;
            (a + b.mapv(|z| z * C64::new(0.0, 1.0))).mapv(|z| z * 0.5)
        }
    };
    let map = TransferMap {
        layout: model.layout.clone(),
        readout: calibration.readout,
        e00,
        e11,
        e01,
    };
    let per_state = CardinalState::ALL
        .into_iter()
        .map(|c| {
            Ok((
                c,
                map.fidelity(&InputState::cardinal(c), calibration.theta_cal)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let used: &[CardinalState] = match method {
        Reconstruction::ChargeSectors => &[Zero, One, Plus],
        _ => &[Zero, One, Plus, PlusI],
    };
    let mut residual: Option<f64> = None;
    for r in runs.iter().filter(|r| !used.contains(&r.input)) {
        let input = InputState::cardinal(r.input);
        let target = TargetState::for_readout(
            &model.layout,
            &input,
            calibration.theta_cal,
            calibration.readout,
        )?;
        let direct = conditional_fidelity(&r.trajectory.final_state, &target)?;
        let rebuilt = per_state.iter().find(|(s, _)| *s == r.input).unwrap().1;
        residual = Some(residual.unwrap_or(0.0).max((direct - rebuilt).abs()));
    }
    let mean = mean_fidelity(&per_state)?;
    Ok(FidelityReport {
        calibration,
        per_state,
        mean,
        runs,
        map,
        linearity_residual: residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::Truncation;
    use crate::integrator::SampleGrid;
    use crate::model::SystemParams;
    use crate::pulses::{three_step_protocol, ProtocolOptions};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn layout() -> Arc<SpaceLayout> {
        SpaceLayout::full(&Truncation {
            cavity: 2,
            mode_i: 3,
            mode_r: 2,
            mode_s: 2,
        })
        .unwrap()
    }

    fn params() -> SystemParams {
        SystemParams {
            kappa: 1.0 / 13e-6,
            ..SystemParams::default()
        }
        .resonance_compensated(true)
    }

    fn config() -> IntegratorConfig {
        IntegratorConfig {
            samples: SampleGrid::Uniform(4),
            ..IntegratorConfig::default()
        }
    }

    fn setup(p: &SystemParams, layout: &Arc<SpaceLayout>) -> (TransferModel, PulseSchedule) {
        let model = TransferModel::rydberg(p, layout).unwrap();
        (
            model,
            three_step_protocol(p, &ProtocolOptions::default()).unwrap(),
        )
    }

    fn projector(v: &[C64]) -> CMatrix {
        CMatrix::from_shape_fn((v.len(), v.len()), |(r, c)| v[r] * v[c].conj())
    }

    #[test]
    fn target_projector_has_unit_fidelity() {
        let l = layout();
        for c in CardinalState::ALL {
            let t = TargetState::new(&l, &InputState::cardinal(c), 0.7).unwrap();
            let rho = DensityMatrix::from_matrix(l.clone(), projector(t.vector())).unwrap();
            assert!((conditional_fidelity(&rho, &t).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mixed_code_space_gives_one_half_on_the_equator() {
        let l = layout();
        let t0 = TargetState::new(&l, &InputState::cardinal(CardinalState::Zero), 0.0).unwrap();
        let mut m = CMatrix::zeros((l.total_dim(), l.total_dim()));
        m[[t0.vacuum, t0.vacuum]] = C64::new(0.5, 0.0);
        m[[t0.stored, t0.stored]] = C64::new(0.5, 0.0);
        let rho = DensityMatrix::from_matrix(l.clone(), m).unwrap();
        for phi in [0.0, 0.4, 2.0, 5.5] {
            let t = TargetState::new(&l, &InputState::bloch(PI / 2.0, phi).unwrap(), 1.3).unwrap();
            assert!((conditional_fidelity(&rho, &t).unwrap() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let small = SpaceLayout::full(&Truncation {
            cavity: 2,
            mode_i: 2,
            mode_r: 2,
            mode_s: 2,
        })
        .unwrap();
        let t =
            TargetState::new(&layout(), &InputState::cardinal(CardinalState::One), 0.0).unwrap();
        let rho = initial_state(&small, &InputState::cardinal(CardinalState::One), 0.0).unwrap();
        assert!(matches!(
            conditional_fidelity(&rho, &t),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn mean_of_equal_fidelities_and_missing_states() {
        let all: Vec<_> = CardinalState::ALL.iter().map(|&c| (c, 0.83)).collect();
        assert!((mean_fidelity(&all).unwrap() - 0.83).abs() < 1e-15);
        assert!(matches!(
            mean_fidelity(&all[..5]),
            Err(Error::MissingState("-i"))
        ));
    }

    #[test]
    fn input_states() {
        assert!(InputState::new(C64::new(1.0, 0.0), C64::new(0.1, 0.0)).is_err());
        let plus_i = InputState::cardinal(CardinalState::PlusI);
        let bloch = InputState::bloch(PI / 2.0, PI / 2.0).unwrap();
        assert!((plus_i.alpha() - bloch.alpha()).norm() < 1e-15);
        assert!((plus_i.beta() - bloch.beta()).norm() < 1e-15);
        assert_eq!(
            CardinalState::from_label("plus_i"),
            Some(CardinalState::PlusI)
        );
        assert_eq!(CardinalState::from_label("-"), Some(CardinalState::Minus));
    }

    #[test]
    fn initial_state_is_product_with_thermal_cavity() {
        let l = SpaceLayout::full(&Truncation::default().with_thermal_cavity(0.3)).unwrap();
        let rho = initial_state(&l, &InputState::cardinal(CardinalState::Plus), 0.3).unwrap();
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
        assert!((rho.mean_occupation(Subsystem::Cavity).re - 0.3).abs() < 1e-5);
        assert!(rho.purity() < 0.8);
        let q = rho.partial_trace(&[Subsystem::Qubit]).unwrap();
        assert!((q.matrix()[[0, 1]].re - 0.5).abs() < 1e-12);
        assert!(matches!(
            initial_state(&layout(), &InputState::cardinal(CardinalState::Zero), 0.5),
            Err(Error::TruncationTooSmall { .. })
        ));
    }

    #[test]
    fn optimal_phase_beats_a_grid() {
        let l = layout();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = l.total_dim();
        let g = CMatrix::from_shape_fn((d, d), |_| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let m = g.dot(&linalg::dagger(g.view()));
        let tr = linalg::trace(m.view());
        let rho = DensityMatrix::from_matrix(l.clone(), m.mapv(|z| z / tr)).unwrap();
        let input = InputState::cardinal(CardinalState::Minus);
        let best = optimal_phase(&rho, &input, Readout::Storage).unwrap();
        let f = |th: f64| {
            conditional_fidelity(&rho, &TargetState::new(&l, &input, th).unwrap()).unwrap()
        };
        for k in 0..64 {
            assert!(f(best) >= f(k as f64 * PI / 32.0) - 1e-15);
        }
    }

    #[test]
    fn calibration_is_idempotent_and_state_independent() {
        let (model, sched) = setup(&params(), &layout());
        let plus = calibrate_phase(&model, &sched, &config()).unwrap();
        assert!(plus.noiseless_fidelity > CALIBRATION_FLOOR);
        let again = calibrate_phase(&model, &sched, &config()).unwrap();
        assert!((plus.theta_cal - again.theta_cal).abs() < 1e-6);
        let plus_i = InputState::cardinal(CardinalState::PlusI);
        let other = calibrate_phase_with(
            &model,
            &sched,
            &config(),
            &plus_i,
            Readout::Storage,
            CALIBRATION_FLOOR,
        )
        .unwrap();
        let diff = (plus.theta_cal - other.theta_cal + PI).rem_euclid(2.0 * PI) - PI;
        assert!(diff.abs() < 1e-4, "{diff}");
    }

    #[test]
    fn calibration_fails_without_couplings() {
        let p = params();
        let sched = three_step_protocol(&p, &ProtocolOptions::default()).unwrap();
        let dead = TransferModel::rydberg(
            &SystemParams {
                eta_qc: 0.0,
                eta_ac: 0.0,
                ..p
            },
            &layout(),
        )
        .unwrap();
        assert!(matches!(
            calibrate_phase(&dead, &sched, &config()),
            Err(Error::Calibration { .. })
        ));
    }

    fn thermal_report(method: Reconstruction) -> FidelityReport {
        let n_bar = 0.05;
        let trunc = Truncation {
            cavity: 2,
            mode_i: 2,
            mode_r: 2,
            mode_s: 2,
        }
        .with_thermal_cavity(n_bar);
        let l = SpaceLayout::full(&trunc).unwrap();
        // Exaggerated loss so that every term of the map is visible.
        let p = SystemParams {
            n_bar,
            kappa: 3e5,
            gamma_r: 2e5,
            gamma_s: 1e5,
            ..params()
        };
        let (model, sched) = setup(&p, &l);
        let plus = InputState::cardinal(CardinalState::Plus);
        let cal =
            calibrate_phase_with(&model, &sched, &config(), &plus, Readout::Storage, 0.0).unwrap();
        evaluate_transfer(&model, &sched, &config(), n_bar, cal, method).unwrap()
    }

    #[test]
    fn reconstructions_agree_with_direct_runs() {
        let direct = thermal_report(Reconstruction::Direct);
        let residual = direct.linearity_residual.unwrap();
        assert!(residual < 1e-8, "{residual}");
        let sectors = thermal_report(Reconstruction::ChargeSectors);
        assert_eq!(sectors.runs.len(), 3);
        assert!(sectors.linearity_residual.is_none());
        for c in CardinalState::ALL {
            assert!(
                (direct.fidelity(c) - sectors.fidelity(c)).abs() < 1e-8,
                "{c}"
            );
        }
        assert!(direct.mean < 0.99 && direct.mean > 0.5);
        assert!(
            (direct.error_probability() - (1.0 - direct.fidelity(CardinalState::One))).abs()
                < 1e-15
        );
    }

    #[test]
    fn six_state_mean_matches_monte_carlo() {
        let report = thermal_report(Reconstruction::ChargeSectors);
        let mut rng = ChaCha8Rng::seed_from_u64(2026);
        let samples: Vec<f64> = (0..500)
            .map(|_| {
                let input = InputState::from_uniform(rng.random(), rng.random()).unwrap();
                report
                    .map
                    .fidelity(&input, report.calibration.theta_cal)
                    .unwrap()
            })
            .collect();
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        assert!(
            (mean - report.mean).abs() < 2.0 * se,
            "{mean} vs {} (se {se})",
            report.mean
        );
    }

    #[test]
    fn ground_input_is_insensitive_to_cavity_loss() {
        let p = params();
        let (model, sched) = setup(&p, &layout());
        let cal = calibrate_phase(&model, &sched, &config()).unwrap();
        let report = evaluate_transfer(
            &model,
            &sched,
            &config(),
            0.0,
            cal,
            Reconstruction::ChargeSectors,
        )
        .unwrap();
        assert!(report.fidelity(CardinalState::Zero) >= 0.999);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn fidelity_is_linear_and_bounded(w in 0.0f64..1.0, theta in 0.0f64..PI, phi in 0.0f64..6.3, seed in 0u64..100) {
            let l = layout();
            let d = l.total_dim();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut random_rho = || {
                let g = CMatrix::from_shape_fn((d, d), |_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
                let m = g.dot(&linalg::dagger(g.view()));
                let tr = linalg::trace(m.view());
                m.mapv(|z| z / tr)
            };
            let (a, b) = (random_rho(), random_rho());
            let mix = &a.mapv(|z| z * w) + &b.mapv(|z| z * (1.0 - w));
            let t = TargetState::new(&l, &InputState::bloch(theta, phi).unwrap(), 0.3).unwrap();
            let f = |m: CMatrix| conditional_fidelity(&DensityMatrix::from_matrix(l.clone(), m).unwrap(), &t).unwrap();
            let (fa, fb, fm) = (f(a), f(b), f(mix));
            prop_assert!((0.0..=1.0).contains(&fa));
            prop_assert!((fm - (w * fa + (1.0 - w) * fb)).abs() < 1e-10);
        }
    }
}
