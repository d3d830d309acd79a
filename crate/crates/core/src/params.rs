// Copyright 2026 hybridq Contributors
// SPDX-License-Identifier: Apache-2.0

//! Closed-form physical parameters: constants, cavity and Rydberg formulas,
//! effective rates and π-pulse timings.
//!
//! Formulas are evaluated on [`Quantity`] values that carry SI dimension
//! exponents, so every derived output can be checked for its unit.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Div, Mul};

use crate::error::{Error, Result};

/// SI dimension exponents (m, kg, s, A, K).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dim(pub [i8; 5]);

impl Dim {
    pub const NONE: Dim = Dim([0, 0, 0, 0, 0]);
    pub const LENGTH: Dim = Dim([1, 0, 0, 0, 0]);
    pub const TIME: Dim = Dim([0, 0, 1, 0, 0]);
    pub const RATE: Dim = Dim([0, 0, -1, 0, 0]);
    pub const VOLUME: Dim = Dim([3, 0, 0, 0, 0]);
    pub const ENERGY: Dim = Dim([2, 1, -2, 0, 0]);
    pub const ACTION: Dim = Dim([2, 1, -1, 0, 0]);
    pub const CHARGE: Dim = Dim([0, 0, 1, 1, 0]);
    pub const VELOCITY: Dim = Dim([1, 0, -1, 0, 0]);
    pub const PERMITTIVITY: Dim = Dim([-3, -1, 4, 2, 0]);
    pub const FIELD: Dim = Dim([1, 1, -3, -1, 0]);
    pub const DIPOLE: Dim = Dim([1, 0, 1, 1, 0]);
    pub const TEMPERATURE: Dim = Dim([0, 0, 0, 0, 1]);
    pub const ENERGY_PER_K: Dim = Dim([2, 1, -2, 0, -1]);
    pub const FLUX: Dim = Dim([2, 1, -2, -1, 0]);

    fn combine(self, other: Dim, sign: i8) -> Dim {
        let mut e = self.0;
        for (a, b) in e.iter_mut().zip(other.0) {
            *a += sign * b;
        }
        Dim(e)
    }

    fn halve(self) -> Option<Dim> {
        let mut e = self.0;
        for a in e.iter_mut() {
            if *a % 2 != 0 {
                return None;
            }
            *a /= 2;
        }
        Some(Dim(e))
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Dim::NONE => "1",
            Dim::LENGTH => "m",
            Dim::TIME => "s",
            Dim::RATE => "rad/s",
            Dim::VOLUME => "m^3",
            Dim::ENERGY => "J",
            Dim::ACTION => "J s",
            Dim::CHARGE => "C",
            Dim::VELOCITY => "m/s",
            Dim::PERMITTIVITY => "F/m",
            Dim::FIELD => "V/m",
            Dim::DIPOLE => "C m",
            Dim::TEMPERATURE => "K",
            Dim::ENERGY_PER_K => "J/K",
            Dim::FLUX => "Wb",
            _ => "?",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quantity {
    pub value: f64,
    pub dim: Dim,
}

impl Quantity {
    pub const fn new(value: f64, dim: Dim) -> Self {
        Self { value, dim }
    }

    pub const fn scalar(value: f64) -> Self {
        Self {
            value,
            dim: Dim::NONE,
        }
    }

    pub fn sqrt(self) -> Self {
        let dim = self
            .dim
            .halve()
            .expect("square root of a quantity with odd dimension");
        Self {
            value: self.value.sqrt(),
            dim,
        }
    }

    pub fn scale(self, w: f64) -> Self {
        Self {
            value: self.value * w,
            dim: self.dim,
        }
    }

    /// Value after asserting the dimension.
    pub fn in_dim(self, dim: Dim) -> f64 {
        assert_eq!(
            self.dim, dim,
            "dimension mismatch: {:?} vs {:?}",
            self.dim, dim
        );
        self.value
    }
}

impl Mul for Quantity {
    type Output = Quantity;
    fn mul(self, rhs: Quantity) -> Quantity {
        Quantity {
            value: self.value * rhs.value,
            dim: self.dim.combine(rhs.dim, 1),
        }
    }
}

impl Div for Quantity {
    type Output = Quantity;
    fn div(self, rhs: Quantity) -> Quantity {
        Quantity {
            value: self.value / rhs.value,
            dim: self.dim.combine(rhs.dim, -1),
        }
    }
}

/// CODATA 2018 values.
#[derive(Clone, Copy, Debug)]
pub struct PhysicalConstants {
    pub hbar: Quantity,
    pub planck: Quantity,
    pub c: Quantity,
    pub e: Quantity,
    pub bohr_radius: Quantity,
    pub epsilon0: Quantity,
    pub k_b: Quantity,
    pub alpha: Quantity,
    /// Rydberg energy corrected for the ⁸⁷Rb reduced mass.
    pub rydberg_energy: Quantity,
}

/// Infinite-mass Rydberg energy R∞hc (J).
pub const RYDBERG_ENERGY_INFINITE: f64 = 2.179_872_361_103_5e-18;
/// Electron mass in unified atomic mass units.
pub const ELECTRON_MASS_U: f64 = 5.485_799_090_65e-4;
/// ⁸⁷Rb atomic mass (u).
pub const RB87_MASS_U: f64 = 86.909_180_531;

pub const CONSTANTS: PhysicalConstants = PhysicalConstants {
    hbar: Quantity::new(1.054_571_817e-34, Dim::ACTION),
    planck: Quantity::new(6.626_070_15e-34, Dim::ACTION),
    c: Quantity::new(299_792_458.0, Dim::VELOCITY),
    e: Quantity::new(1.602_176_634e-19, Dim::CHARGE),
    bohr_radius: Quantity::new(5.291_772_109_03e-11, Dim::LENGTH),
    epsilon0: Quantity::new(8.854_187_812_8e-12, Dim::PERMITTIVITY),
    k_b: Quantity::new(1.380_649e-23, Dim::ENERGY_PER_K),
    alpha: Quantity::scalar(7.297_352_569_3e-3),
    rydberg_energy: Quantity::new(
        RYDBERG_ENERGY_INFINITE / (1.0 + ELECTRON_MASS_U / (RB87_MASS_U - ELECTRON_MASS_U)),
        Dim::ENERGY,
    ),
};

impl PhysicalConstants {
    /// Φ₀ = h/2e (SI).
    pub fn flux_quantum(&self) -> Quantity {
        self.planck / self.e.scale(2.0)
    }

    /// a₀e.
    pub fn atomic_dipole(&self) -> Quantity {
        self.bohr_radius * self.e
    }
}

/// Angular frequency for a value given in Hz.
pub fn two_pi_hz(f: f64) -> f64 {
    2.0 * PI * f
}

/// Renders an angular frequency as "2π × <value> <unit>".
pub fn display_two_pi(omega: f64) -> String {
    let f = omega / (2.0 * PI);
    let (scale, unit) = match f.abs() {
        x if x >= 1e9 => (1e9, "GHz"),
        x if x >= 1e6 => (1e6, "MHz"),
        x if x >= 1e3 => (1e3, "kHz"),
        _ => (1.0, "Hz"),
    };
    format!("2π × {:.4} {}", f / scale, unit)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CavityGeometry {
    /// Strip-line length (m).
    pub length: f64,
    /// Electrode distance (m).
    pub electrode_gap: f64,
    pub epsilon_r: f64,
    pub mode_index: u32,
    pub quality_factor: f64,
}

impl Default for CavityGeometry {
    fn default() -> Self {
        Self {
            length: 1e-2,
            electrode_gap: 10e-6,
            epsilon_r: 6.0,
            mode_index: 2,
            quality_factor: 1e6,
        }
    }
}

impl CavityGeometry {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("cavity.length", self.length),
            ("cavity.electrode_gap", self.electrode_gap),
            ("cavity.epsilon_r", self.epsilon_r),
            ("cavity.mode_index", self.mode_index as f64),
            ("cavity.quality_factor", self.quality_factor),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    reason: "must be positive",
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RydbergPair {
    /// Principal quantum number of the p state |i⟩; |r⟩ is the (n+1)s state.
    pub n: u32,
    pub defect_s: f64,
    pub defect_p: f64,
}

impl Default for RydbergPair {
    fn default() -> Self {
        Self {
            n: 68,
            defect_s: 3.131,
            defect_p: 2.6545,
        }
    }
}

impl RydbergPair {
    pub fn validate(&self) -> Result<()> {
        let n = self.n as f64;
        for (name, d) in [
            ("rydberg.defect_s", self.defect_s),
            ("rydberg.defect_p", self.defect_p),
        ] {
            if !(0.0..n).contains(&d) {
                return Err(Error::InvalidParameter {
                    name,
                    value: d,
                    reason: "defect must lie in [0, n)",
                });
            }
        }
        Ok(())
    }
}

/// ω₁₀ = (2E_J/ħ) cos(πΦ/Φ₀); may be negative.
pub fn qubit_frequency(
    josephson_energy: Quantity,
    flux: Quantity,
    flux_quantum: Quantity,
) -> Quantity {
    let ratio = (flux / flux_quantum).in_dim(Dim::NONE);
    (josephson_energy.scale(2.0) / CONSTANTS.hbar).scale((PI * ratio).cos())
}

/// ω_ri between |i⟩ = np and |r⟩ = (n+1)s from the quantum-defect formula.
pub fn rydberg_transition_frequency(pair: &RydbergPair) -> Result<Quantity> {
    pair.validate()?;
    let n = pair.n as f64;
    let lower = (n - pair.defect_p).powi(-2);
    let upper = (n + 1.0 - pair.defect_s).powi(-2);
    let omega = (CONSTANTS.rydberg_energy / CONSTANTS.hbar).scale(lower - upper);
    if !(omega.value > 0.0) {
        return Err(Error::InvalidParameter {
            name: "rydberg pair",
            value: omega.value,
            reason: "transition frequency must be positive",
        });
    }
    Ok(omega)
}

/// ω_c = πmc/(L√ε_r).
pub fn cavity_mode_frequency(geom: &CavityGeometry) -> Quantity {
    CONSTANTS
        .c
        .scale(PI * geom.mode_index as f64 / geom.epsilon_r.sqrt())
        / Quantity::new(geom.length, Dim::LENGTH)
}

/// V_c = (π/2) w² L.
pub fn mode_volume(geom: &CavityGeometry) -> Quantity {
    let w = Quantity::new(geom.electrode_gap, Dim::LENGTH);
    let l = Quantity::new(geom.length, Dim::LENGTH);
    (w * w * l).scale(PI / 2.0)
}

/// ε_c = √(ħω_c / 2ε₀V_c).
pub fn vacuum_field(omega_c: Quantity, volume: Quantity) -> Quantity {
    ((CONSTANTS.hbar * omega_c) / (CONSTANTS.epsilon0 * volume).scale(2.0)).sqrt()
}

/// η = ℘ ε_c u / ħ.
pub fn coupling_rate(dipole: Quantity, field: Quantity, mode_function: f64) -> Result<Quantity> {
    if !(0.0..=1.0).contains(&mode_function) {
        return Err(Error::InvalidParameter {
            name: "mode_function",
            value: mode_function,
            reason: "must lie in [0, 1]",
        });
    }
    Ok((dipole * field / CONSTANTS.hbar).scale(mode_function))
}

/// Bose occupation (e^{ħω/k_BT} − 1)⁻¹, zero at T = 0.
pub fn thermal_occupation(omega: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    let x = CONSTANTS.hbar.value * omega / (CONSTANTS.k_b.value * temperature);
    1.0 / x.exp_m1()
}

/// Temperature for a given k_BT/ħω ratio.
pub fn temperature_for_ratio(omega: f64, ratio: f64) -> f64 {
    ratio * CONSTANTS.hbar.value * omega / CONSTANTS.k_b.value
}

/// κ = ω_c / Q.
pub fn cavity_decay_rate(omega_c: f64, quality_factor: f64) -> f64 {
    omega_c / quality_factor
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectiveRates {
    /// √N·η_eff (rad/s).
    pub collective_swap_rate: f64,
    /// κ·(drive/Δ)² (s⁻¹).
    pub kappa_eff: f64,
}

/// Adiabatic elimination of a far-detuned level: √N·drive·η/Δ and κ·(drive/Δ)².
pub fn effective_rates(
    drive: f64,
    eta_ac: f64,
    detuning: f64,
    n_atoms: f64,
    kappa: f64,
) -> Result<EffectiveRates> {
    if detuning == 0.0 {
        return Err(Error::ZeroDetuning);
    }
    Ok(EffectiveRates {
        collective_swap_rate: n_atoms.sqrt() * drive * eta_ac / detuning,
        kappa_eff: kappa * (drive / detuning).powi(2),
    })
}

/// π-pulse duration π/(2·rate).
pub fn pi_pulse_time(name: &'static str, rate: f64) -> Result<f64> {
    if !(rate.abs() > 0.0) || !rate.is_finite() {
        return Err(Error::InvalidParameter {
            name,
            value: rate,
            reason: "zero rate gives an unbounded pulse",
        });
    }
    Ok(PI / (2.0 * rate.abs()))
}

/// First-order loss probability rate × duration.
pub fn loss_estimate(rate: f64, duration: f64) -> f64 {
    rate * duration
}

/// Primitive inputs of the parameter chain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainInputs {
    pub geometry: CavityGeometry,
    pub rydberg: RydbergPair,
    /// Electric dipole ℘_ir in units of a₀e.
    pub dipole_ir: f64,
    /// Mode function u(r) at the atomic cloud.
    pub mode_function: f64,
    pub n_atoms: f64,
    /// Hyperfine splitting ω_sg (rad/s).
    pub omega_sg: f64,
    /// Quoted collective magnetic coupling √N·η_ac (rad/s).
    pub magnetic_collective_rate: f64,
    /// Cavity lifetime used for the magnetic and dispersive estimates (s).
    pub magnetic_cavity_lifetime: f64,
    pub eta_qc: f64,
    pub omega_rs: f64,
    /// Δ/η ratio of the adiabatic elimination.
    pub detuning_ratio: f64,
    /// Charge-qubit dipole ℘₀₁ in a₀e.
    pub dipole_qubit: f64,
}

impl Default for ChainInputs {
    fn default() -> Self {
        Self {
            geometry: CavityGeometry::default(),
            rydberg: RydbergPair::default(),
            dipole_ir: 1520.0,
            mode_function: (-1f64).exp(),
            n_atoms: 1e6,
            omega_sg: two_pi_hz(6.83e9),
            magnetic_collective_rate: two_pi_hz(20e3),
            magnetic_cavity_lifetime: 20e-6,
            eta_qc: two_pi_hz(50e6),
            omega_rs: two_pi_hz(250e3),
            detuning_ratio: 10.0,
            dipole_qubit: 1e4,
        }
    }
}

/// One line of the derived-parameter table.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamRow {
    pub name: &'static str,
    pub value: f64,
    pub unit: &'static str,
    /// Human-readable form; angular frequencies as "2π × f".
    pub display: String,
    /// Quoted comparison value.
    pub reference: &'static str,
}

/// Every derived quantity of the chain.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivedParams {
    pub omega_ri: Quantity,
    pub omega_c: Quantity,
    pub mode_volume: Quantity,
    pub vacuum_field: Quantity,
    pub eta_ac: Quantity,
    pub eta_magnetic_single: Quantity,
    pub kappa: f64,
    pub kappa_magnetic: f64,
    pub rydberg_rates: EffectiveRates,
    pub dispersive_rates: EffectiveRates,
    pub tau_qc: f64,
    pub tau_gr: f64,
    pub tau_rs: f64,
    pub tau_sg: f64,
    pub loss_direct: f64,
    pub loss_dispersive: f64,
    pub n_bar_at_0p2: f64,
    pub flux_quantum: Quantity,
}

pub fn derive(inputs: &ChainInputs) -> Result<DerivedParams> {
    inputs.geometry.validate()?;
    let omega_ri = rydberg_transition_frequency(&inputs.rydberg)?;
    let omega_c = cavity_mode_frequency(&inputs.geometry);
    let volume = mode_volume(&inputs.geometry);
    let field = vacuum_field(omega_c, volume);
    let dipole = CONSTANTS.atomic_dipole().scale(inputs.dipole_ir);
    let eta_ac = coupling_rate(dipole, field, inputs.mode_function)?;
    let magnetic_dipole = (CONSTANTS.atomic_dipole() * CONSTANTS.alpha).scale(0.5);
    let eta_magnetic_single = coupling_rate(magnetic_dipole, field, 1.0)?;
    let kappa = cavity_decay_rate(omega_c.value, inputs.geometry.quality_factor);
    let kappa_magnetic = 1.0 / inputs.magnetic_cavity_lifetime;

    let sqrt_n = inputs.n_atoms.sqrt();
    let delta_ryd = inputs.detuning_ratio * eta_ac.value;
    let omega_gi = eta_ac.value / sqrt_n;
    let rydberg_rates = effective_rates(omega_gi, eta_ac.value, delta_ryd, inputs.n_atoms, kappa)?;
    let eta_mag = inputs.magnetic_collective_rate / sqrt_n;
    let delta_disp = inputs.detuning_ratio * inputs.eta_qc;
    let dispersive_rates = effective_rates(
        inputs.eta_qc,
        eta_mag,
        delta_disp,
        inputs.n_atoms,
        kappa_magnetic,
    )?;

    let tau_qc = pi_pulse_time("eta_qc", inputs.eta_qc)?;
    let tau_gr = pi_pulse_time("collective swap rate", rydberg_rates.collective_swap_rate)?;
    let tau_rs = pi_pulse_time("omega_rs", inputs.omega_rs)?;
    let tau_sg = pi_pulse_time("magnetic collective rate", inputs.magnetic_collective_rate)?;
    let tau_disp = pi_pulse_time(
        "dispersive swap rate",
        dispersive_rates.collective_swap_rate,
    )?;

    Ok(DerivedParams {
        omega_ri,
        omega_c,
        mode_volume: volume,
        vacuum_field: field,
        eta_ac,
        eta_magnetic_single,
        kappa,
        kappa_magnetic,
        rydberg_rates,
        dispersive_rates,
        tau_qc,
        tau_gr,
        tau_rs,
        tau_sg,
        loss_direct: loss_estimate(kappa_magnetic, tau_sg),
        loss_dispersive: loss_estimate(dispersive_rates.kappa_eff, tau_disp),
        n_bar_at_0p2: 1.0 / 5f64.exp_m1(),
        flux_quantum: CONSTANTS.flux_quantum(),
    })
}

impl DerivedParams {
    pub fn table(&self) -> Vec<ParamRow> {
        let freq = |name, q: Quantity, reference| ParamRow {
            name,
            value: q.in_dim(Dim::RATE),
            unit: Dim::RATE.symbol(),
            display: display_two_pi(q.value),
            reference,
        };
        let plain = |name, value: f64, dim: Dim, reference| ParamRow {
            name,
            value,
            unit: dim.symbol(),
            display: format!("{value:.4e} {}", dim.symbol()),
            reference,
        };
        let time = |name, value: f64, reference| ParamRow {
            name,
            value,
            unit: "s",
            display: format!("{:.4} us", value * 1e6),
            reference,
        };
        let rate = |name, value: f64, reference| ParamRow {
            name,
            value,
            unit: "1/s",
            display: display_two_pi(value),
            reference,
        };
        vec![
            freq("omega_ri", self.omega_ri, "2π × 12.2 GHz"),
            freq("omega_c", self.omega_c, "2π × 12.16 GHz"),
            plain(
                "mode_volume",
                self.mode_volume.in_dim(Dim::VOLUME),
                Dim::VOLUME,
                "1.57e-12 m^3",
            ),
            plain(
                "vacuum_field",
                self.vacuum_field.in_dim(Dim::FIELD),
                Dim::FIELD,
                ">= 0.5 V/m",
            ),
            freq("eta_ac", self.eta_ac, "2π × 3.85 MHz"),
            freq("eta_ac_magnetic", self.eta_magnetic_single, "2π × 20 Hz"),
            rate("kappa", self.kappa, "1/kappa ~ 10 us"),
            freq(
                "rydberg_swap_rate",
                Quantity::new(self.rydberg_rates.collective_swap_rate, Dim::RATE),
                "2π × 0.385 MHz",
            ),
            freq(
                "dispersive_swap_rate",
                Quantity::new(self.dispersive_rates.collective_swap_rate, Dim::RATE),
                "2π × 2 kHz",
            ),
            rate(
                "dispersive_kappa_eff",
                self.dispersive_rates.kappa_eff,
                "2π × 100 Hz",
            ),
            time("tau_qc", self.tau_qc, "5 ns"),
            time("tau_gr", self.tau_gr, "0.65 us"),
            time("tau_rs", self.tau_rs, "1 us"),
            time("tau_sg", self.tau_sg, "12 us"),
            plain("loss_direct_magnetic", self.loss_direct, Dim::NONE, "~0.5"),
            plain("loss_dispersive", self.loss_dispersive, Dim::NONE, "0.08"),
            plain("n_bar_at_kT_0.2", self.n_bar_at_0p2, Dim::NONE, "<= 0.01"),
            plain(
                "flux_quantum",
                self.flux_quantum.in_dim(Dim::FLUX),
                Dim::FLUX,
                "h/2e",
            ),
        ]
    }
}

impl fmt::Display for ParamRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<24} {:>14.6e} {:<6} {:<22} {}",
            self.name, self.value, self.unit, self.display, self.reference
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn qubit_frequency_special_points() {
        let phi0 = CONSTANTS.flux_quantum();
        let ej = Quantity::new(CONSTANTS.hbar.value * two_pi_hz(10e9), Dim::ENERGY);
        let w0 = qubit_frequency(ej, Quantity::new(0.0, Dim::FLUX), phi0);
        assert!(rel(w0.in_dim(Dim::RATE), two_pi_hz(20e9)) < 1e-14);
        let half = qubit_frequency(ej, phi0.scale(0.5), phi0);
        assert!(half.value.abs() < 1e-5);
        // Invert cos = 0.608 to land on 12.16 GHz.
        let flux = phi0.scale(0.608f64.acos() / PI);
        let w = qubit_frequency(ej, flux, phi0);
        assert!(rel(w.value, two_pi_hz(12.16e9)) < 1e-12);
    }

    #[test]
    fn rydberg_frequency_and_hydrogenic_limit() {
        let w = rydberg_transition_frequency(&RydbergPair::default()).unwrap();
        assert_eq!(w.dim, Dim::RATE);
        assert!(rel(w.value, two_pi_hz(12.2e9)) < 0.02);
        let ry = CONSTANTS.rydberg_energy.value / CONSTANTS.hbar.value;
        let h = rydberg_transition_frequency(&RydbergPair {
            n: 68,
            defect_s: 0.0,
            defect_p: 0.0,
        })
        .unwrap();
        assert!(rel(h.value, ry * (1.0 / 68f64.powi(2) - 1.0 / 69f64.powi(2))) < 1e-14);
        let d = 0.4;
        let shifted = rydberg_transition_frequency(&RydbergPair {
            n: 68,
            defect_s: d,
            defect_p: d,
        })
        .unwrap();
        assert!(
            rel(
                shifted.value,
                ry * ((68.0 - d).powi(-2) - (69.0 - d).powi(-2))
            ) < 1e-14
        );
        assert!(rydberg_transition_frequency(&RydbergPair {
            n: 5,
            defect_s: 0.0,
            defect_p: 3.0
        })
        .is_ok());
        assert!(rydberg_transition_frequency(&RydbergPair {
            n: 3,
            defect_s: 0.0,
            defect_p: 3.5
        })
        .is_err());
    }

    #[test]
    fn mass_correction_is_tiny() {
        let r = CONSTANTS.rydberg_energy.value / RYDBERG_ENERGY_INFINITE;
        assert!((1.0 - r - 6.3e-6).abs() < 1e-7);
    }

    #[test]
    fn cavity_chain() {
        let g = CavityGeometry::default();
        let wc = cavity_mode_frequency(&g);
        assert_eq!(wc.dim, Dim::RATE);
        assert!(rel(wc.value, two_pi_hz(12.16e9)) < 0.01);
        let g2 = CavityGeometry { mode_index: 4, ..g };
        assert!(rel(cavity_mode_frequency(&g2).value, 2.0 * wc.value) < 1e-15);
        // Free-space half-wave resonator.
        let f = 5e9;
        let free = CavityGeometry {
            epsilon_r: 1.0,
            length: CONSTANTS.c.value / (2.0 * f),
            mode_index: 1,
            ..g
        };
        assert!(rel(cavity_mode_frequency(&free).value, two_pi_hz(f)) < 1e-14);
        let v = mode_volume(&g);
        assert_eq!(v.dim, Dim::VOLUME);
        assert!(rel(v.value, 1.5708e-12) < 1e-4);
        let field = vacuum_field(Quantity::new(two_pi_hz(12.16e9), Dim::RATE), v);
        assert_eq!(field.dim, Dim::FIELD);
        assert!(rel(field.value, 0.54) < 0.02);
        let quarter = vacuum_field(Quantity::new(two_pi_hz(12.16e9), Dim::RATE), v.scale(4.0));
        assert!(rel(quarter.value, field.value / 2.0) < 1e-14);
    }

    #[test]
    fn coupling_rates() {
        let field = Quantity::new(0.54, Dim::FIELD);
        let eta = coupling_rate(
            CONSTANTS.atomic_dipole().scale(1520.0),
            field,
            (-1f64).exp(),
        )
        .unwrap();
        assert_eq!(eta.dim, Dim::RATE);
        assert!(rel(eta.value, two_pi_hz(3.85e6)) < 0.03);
        let mag = coupling_rate(
            (CONSTANTS.atomic_dipole() * CONSTANTS.alpha).scale(0.5),
            field,
            1.0,
        )
        .unwrap();
        let f = mag.value / (2.0 * PI);
        assert!((13.0..30.0).contains(&f), "magnetic coupling {f} Hz");
        assert_eq!(
            coupling_rate(CONSTANTS.atomic_dipole(), field, 0.0)
                .unwrap()
                .value,
            0.0
        );
        assert!(coupling_rate(CONSTANTS.atomic_dipole(), field, 1.5).is_err());
    }

    #[test]
    fn thermal_occupation_limits() {
        let w = two_pi_hz(12.16e9);
        assert_eq!(thermal_occupation(w, 0.0), 0.0);
        let n = thermal_occupation(w, temperature_for_ratio(w, 0.2));
        assert!(rel(n, 1.0 / (5f64.exp() - 1.0)) < 1e-12);
        assert!((0.006..0.008).contains(&n));
        let classical = thermal_occupation(w, temperature_for_ratio(w, 10.0));
        assert!(rel(classical, 10.0) < 0.05);
    }

    #[test]
    fn decay_rate_lifetimes() {
        let k1 = cavity_decay_rate(two_pi_hz(6.83e9), 1e6);
        assert!(rel(1.0 / k1, 23.3e-6) < 0.01);
        assert!(rel(1.0 / k1, 20e-6) < 0.35);
        let k2 = cavity_decay_rate(two_pi_hz(12.16e9), 1e6);
        assert!(rel(1.0 / k2, 13.1e-6) < 0.01);
        assert!(rel(1.0 / k2, 10e-6) < 0.35);
    }

    #[test]
    fn effective_rate_scaling() {
        let r = effective_rates(
            two_pi_hz(3.85e6) / 1e3,
            two_pi_hz(3.85e6),
            two_pi_hz(38.5e6),
            1e6,
            1e5,
        )
        .unwrap();
        assert!(rel(r.collective_swap_rate, two_pi_hz(0.385e6)) < 1e-12);
        let r2 = effective_rates(
            two_pi_hz(3.85e6) / 1e3,
            two_pi_hz(3.85e6),
            two_pi_hz(77e6),
            1e6,
            1e5,
        )
        .unwrap();
        assert!(rel(r2.collective_swap_rate, r.collective_swap_rate / 2.0) < 1e-12);
        assert!(rel(r2.kappa_eff, r.kappa_eff / 4.0) < 1e-12);
        assert!(matches!(
            effective_rates(1.0, 1.0, 0.0, 1.0, 1.0),
            Err(Error::ZeroDetuning)
        ));
    }

    #[test]
    fn derived_chain_matches_quoted_values() {
        let d = derive(&ChainInputs::default()).unwrap();
        assert!(rel(d.omega_ri.value, two_pi_hz(12.2e9)) < 0.02);
        assert!(rel(d.vacuum_field.value, 0.54) < 0.10);
        assert!(rel(d.eta_ac.value, two_pi_hz(3.85e6)) < 0.03);
        assert!(rel(d.tau_gr, 0.65e-6) < 0.02);
        assert!(rel(d.tau_rs, 1.0e-6) < 1e-12);
        assert!(rel(d.tau_qc, 5e-9) < 1e-12);
        assert!(rel(d.tau_sg, 12.5e-6) < 1e-12);
        assert!(rel(d.loss_direct, 0.625) < 1e-12);
        assert!(rel(d.dispersive_rates.collective_swap_rate, two_pi_hz(2e3)) < 0.2);
        assert!(rel(d.dispersive_rates.kappa_eff, two_pi_hz(100.0)) < 0.3);
        assert!((d.loss_dispersive - 0.08).abs() <= 0.02);
        for row in d.table() {
            assert!(row.value.is_finite(), "{}", row.name);
            assert_ne!(row.unit, "?", "{}", row.name);
        }
    }

    #[test]
    fn units_self_test() {
        let d = derive(&ChainInputs::default()).unwrap();
        assert_eq!(d.omega_ri.dim, Dim::RATE);
        assert_eq!(d.omega_c.dim, Dim::RATE);
        assert_eq!(d.mode_volume.dim, Dim::VOLUME);
        assert_eq!(d.vacuum_field.dim, Dim::FIELD);
        assert_eq!(d.eta_ac.dim, Dim::RATE);
        assert_eq!(d.eta_magnetic_single.dim, Dim::RATE);
        assert_eq!(d.flux_quantum.dim, Dim::FLUX);
        assert_eq!(CONSTANTS.atomic_dipole().dim, Dim::DIPOLE);
        assert_eq!(
            (CONSTANTS.k_b * Quantity::new(1.0, Dim::TEMPERATURE)).dim,
            Dim::ENERGY
        );
        assert_eq!(Quantity::new(1.0, Dim::RATE).scale(2.0).dim, Dim::RATE);
        assert_eq!(
            (Quantity::new(2.0, Dim::TIME) * Quantity::new(3.0, Dim::RATE)).dim,
            Dim::NONE
        );
    }

    proptest! {
        #[test]
        fn occupation_is_monotone_in_temperature(a in 0.01f64..5.0, b in 0.01f64..5.0) {
            let w = two_pi_hz(12e9);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(thermal_occupation(w, temperature_for_ratio(w, lo))
                <= thermal_occupation(w, temperature_for_ratio(w, hi)));
        }

        #[test]
        fn pi_pulse_inverts_rate(rate in 1.0f64..1e10) {
            let t = pi_pulse_time("rate", rate).unwrap();
            prop_assert!((2.0 * rate * t - PI).abs() < 1e-12);
        }
    }
}
