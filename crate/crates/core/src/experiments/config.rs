// Copyright 2026 hybridq Contributors
// SPDX-License-Identifier: Apache-2.0

//! Scenario configuration: `key = value` lines, `#` comments, dotted keys.
//!
//! The grammar is the TOML subset of bare and dotted keys, so files are
//! parsed with the `toml` crate. Strings need quotes in files; `--set`
//! overrides accept bare words and quote them on the fly.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fidelity::{Reconstruction, CALIBRATION_FLOOR};
use crate::hilbert::Truncation;
use crate::integrator::{IntegratorConfig, InvariantTolerances, Method, SampleGrid};
use crate::model::SystemParams;
use crate::params::{CavityGeometry, ChainInputs, RydbergPair};
use crate::pulses::ProtocolOptions;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Fig3ZeroTemp,
    Fig3Thermal,
    Fig4Sweep,
    DirectMagnetic,
    DispersiveSwap,
    Roundtrip,
    QDegradation,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::Fig3ZeroTemp,
        Scenario::Fig3Thermal,
        Scenario::Fig4Sweep,
        Scenario::DirectMagnetic,
        Scenario::DispersiveSwap,
        Scenario::Roundtrip,
        Scenario::QDegradation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Fig3ZeroTemp => "fig3_zero_temp",
            Scenario::Fig3Thermal => "fig3_thermal",
            Scenario::Fig4Sweep => "fig4_sweep",
            Scenario::DirectMagnetic => "direct_magnetic",
            Scenario::DispersiveSwap => "dispersive_swap",
            Scenario::Roundtrip => "roundtrip",
            Scenario::QDegradation => "q_degradation",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::ConfigRange {
                key: "scenario".into(),
                message: format!(
                    "unknown scenario `{s}`; expected one of {}",
                    Self::ALL.map(|c| c.name()).join(", ")
                ),
            })
    }
}

/// Physical rates and detunings in rad/s; `kappa` and `n_bar` default per scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub eta_qc: f64,
    pub eta_ac: f64,
    pub omega_gi: f64,
    pub omega_rs: f64,
    pub delta_qc: f64,
    pub delta_ig: f64,
    pub delta_ri: f64,
    pub delta_ac: f64,
    pub delta_s: f64,
    pub n_atoms: f64,
    /// Explicit cavity decay; when absent κ = ω_c/Q from the cavity section.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    /// Initial cavity occupation; when absent 0, or 0.5 for `fig3_thermal`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_bar: Option<f64>,
    pub gamma_1: f64,
    pub gamma_phi: f64,
    pub gamma_r: f64,
    pub gamma_s: f64,
    /// Re-tune Δ_ri and Δ_s for light shift and dispersive pull.
    pub compensate: bool,
}

impl Default for ModelSection {
    fn default() -> Self {
        let p = SystemParams::default();
        Self {
            eta_qc: p.eta_qc,
            eta_ac: p.eta_ac,
            omega_gi: p.omega_gi,
            omega_rs: p.omega_rs,
            delta_qc: p.delta_qc,
            delta_ig: p.delta_ig,
            delta_ri: p.delta_ri,
            delta_ac: p.delta_ac,
            delta_s: p.delta_s,
            n_atoms: p.n_atoms,
            kappa: None,
            n_bar: None,
            gamma_1: p.gamma_1,
            gamma_phi: p.gamma_phi,
            gamma_r: p.gamma_r,
            gamma_s: p.gamma_s,
            compensate: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CavitySection {
    pub length: f64,
    pub electrode_gap: f64,
    pub epsilon_r: f64,
    pub mode_index: u32,
    pub quality_factor: f64,
}

impl Default for CavitySection {
    fn default() -> Self {
        let g = CavityGeometry::default();
        Self {
            length: g.length,
            electrode_gap: g.electrode_gap,
            epsilon_r: g.epsilon_r,
            mode_index: g.mode_index,
            quality_factor: g.quality_factor,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RydbergSection {
    pub n: u32,
    pub defect_s: f64,
    pub defect_p: f64,
}

impl Default for RydbergSection {
    fn default() -> Self {
        let r = RydbergPair::default();
        Self {
            n: r.n,
            defect_s: r.defect_s,
            defect_p: r.defect_p,
        }
    }
}

/// Remaining parameter-chain inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainSection {
    pub dipole_ir: f64,
    pub mode_function: f64,
    pub omega_sg: f64,
    pub magnetic_collective_rate: f64,
    pub magnetic_cavity_lifetime: f64,
    pub detuning_ratio: f64,
    pub dipole_qubit: f64,
}

impl Default for ChainSection {
    fn default() -> Self {
        let c = ChainInputs::default();
        Self {
            dipole_ir: c.dipole_ir,
            mode_function: c.mode_function,
            omega_sg: c.omega_sg,
            magnetic_collective_rate: c.magnetic_collective_rate,
            magnetic_cavity_lifetime: c.magnetic_cavity_lifetime,
            detuning_ratio: c.detuning_ratio,
            dipole_qubit: c.dipole_qubit,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolSection {
    pub ramp_time: f64,
    pub ramp_steps: usize,
    pub gap: f64,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        let o = ProtocolOptions::default();
        Self {
            ramp_time: o.ramp_time,
            ramp_steps: o.ramp_steps,
            gap: o.gap,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TruncationSection {
    pub cavity: usize,
    pub mode_i: usize,
    pub mode_r: usize,
    pub mode_s: usize,
    /// i-mode dimension for runs with n̄ > 0.
    pub thermal_mode_i: usize,
    /// Raise the cavity dimension until the thermal tail is below 1e-6.
    pub auto_cavity: bool,
}

impl Default for TruncationSection {
    fn default() -> Self {
        let t = Truncation::default();
        Self {
            cavity: t.cavity,
            mode_i: t.mode_i,
            mode_r: t.mode_r,
            mode_s: t.mode_s,
            thermal_mode_i: 2,
            auto_cavity: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    Chebyshev,
    Dopri45,
    Rk4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSection {
    pub method: MethodName,
    /// Fixed step of `rk4` (s).
    pub rk4_step: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// Uniform sample intervals per trajectory.
    pub samples: usize,
    pub check_invariants: bool,
    pub positivity_every: usize,
    pub lanczos_iterations: usize,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        let c = IntegratorConfig::default();
        Self {
            method: MethodName::Chebyshev,
            rk4_step: 1e-12,
            rel_tol: c.rel_tol,
            abs_tol: c.abs_tol,
            max_step: c.max_step,
            samples: 200,
            check_invariants: c.check_invariants,
            positivity_every: c.positivity_every,
            lanczos_iterations: c.lanczos_iterations,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReconstructionName {
    Sectors,
    FourState,
    Direct,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FidelitySection {
    pub reconstruction: ReconstructionName,
    pub calibration_floor: f64,
}

impl Default for FidelitySection {
    fn default() -> Self {
        Self {
            reconstruction: ReconstructionName::Sectors,
            calibration_floor: CALIBRATION_FLOOR,
        }
    }
}

/// Temperature grid: log-spaced k_BT/ħω_c.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub points: usize,
    pub ratio_min: f64,
    pub ratio_max: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            points: 25,
            ratio_min: 0.05,
            ratio_max: 1.0,
        }
    }
}

/// Quality-factor grid, log-spaced from `q_max` down to `q_min`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QSweepSection {
    pub points: usize,
    pub q_max: f64,
    pub q_min: f64,
}

impl Default for QSweepSection {
    fn default() -> Self {
        Self {
            points: 6,
            q_max: 1e6,
            q_min: 1e5,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    pub model: ModelSection,
    pub cavity: CavitySection,
    pub rydberg: RydbergSection,
    pub chain: ChainSection,
    pub protocol: ProtocolSection,
    pub truncation: TruncationSection,
    pub integrator: IntegratorSection,
    pub fidelity: FidelitySection,
    pub sweep: SweepSection,
    pub qsweep: QSweepSection,
    pub output: OutputSection,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn toml_error(text: &str, e: toml::de::Error, line_offset: usize) -> Error {
    let line = e.span().map(|s| line_of(text, s.start)).unwrap_or(0);
    let message = e.message().to_string();
    if message.starts_with("unknown field") {
        let written = text.lines().nth(line.saturating_sub(1)).unwrap_or("");
        let key = written.split('=').next().unwrap_or(written).trim();
        let key = if key.is_empty() || key.starts_with('[') {
            message.split('`').nth(1).unwrap_or("?").to_string()
        } else {
            key.to_string()
        };
        return Error::UnknownKey {
            key,
            line: line + line_offset,
        };
    }
    Error::ConfigSyntax {
        line: line + line_offset,
        message,
    }
}

fn range(key: &str, message: impl Into<String>) -> Error {
    Error::ConfigRange {
        key: key.into(),
        message: message.into(),
    }
}

/// Parses and validates a configuration; every absent key takes its default.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| toml_error(text, e, 0))?;
    cfg.validate()?;
    Ok(cfg)
}

impl ScenarioConfig {
    /// Applies one `key=value` override; bare-word values are taken as strings.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::ConfigSyntax {
                line: 0,
                message: format!("`{assignment}` is not key=value"),
            })?;
        let (key, value) = (key.trim(), value.trim());
        let mut current = toml::Value::try_from(&*self).map_err(|e| Error::ConfigSyntax {
            line: 0,
            message: e.to_string(),
        })?;
        let parsed: toml::Table = toml::from_str(&format!("{key} = {value}"))
            .or_else(|_| {
                toml::from_str(&format!(
                    "{key} = {}",
                    toml::Value::String(value.to_string())
                ))
            })
            .map_err(|e| toml_error(assignment, e, 0))?;
        merge(&mut current, toml::Value::Table(parsed));
        let text = toml::to_string(&current).map_err(|e| Error::ConfigSyntax {
            line: 0,
            message: e.to_string(),
        })?;
        let next: ScenarioConfig =
            toml::from_str(&text).map_err(|e| match toml_error(&text, e, 0) {
                Error::UnknownKey { .. } => Error::UnknownKey {
                    key: key.to_string(),
                    line: 0,
                },
                Error::ConfigSyntax { message, .. } => Error::ConfigRange {
                    key: key.to_string(),
                    message,
                },
                other => other,
            })?;
        next.validate()?;
        *self = next;
        Ok(())
    }

    /// Resolved configuration in the input grammar, for output headers.
    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        let p = self.base_params(m.n_bar.unwrap_or(0.0));
        p.validate().map_err(|e| match e {
            Error::InvalidParameter {
                name,
                value,
                reason,
            } => range(&format!("model.{name}"), format!("{value}: {reason}")),
            other => other,
        })?;
        self.geometry().validate().map_err(|e| match e {
            Error::InvalidParameter {
                name,
                value,
                reason,
            } => range(name, format!("{value}: {reason}")),
            other => other,
        })?;
        self.rydberg_pair().validate().map_err(|e| match e {
            Error::InvalidParameter {
                name,
                value,
                reason,
            } => range(name, format!("{value}: {reason}")),
            other => other,
        })?;
        let c = &self.chain;
        for (key, v) in [
            ("chain.dipole_ir", c.dipole_ir),
            ("chain.mode_function", c.mode_function),
            ("chain.omega_sg", c.omega_sg),
            ("chain.magnetic_collective_rate", c.magnetic_collective_rate),
            ("chain.magnetic_cavity_lifetime", c.magnetic_cavity_lifetime),
            ("chain.detuning_ratio", c.detuning_ratio),
            ("chain.dipole_qubit", c.dipole_qubit),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(range(key, format!("{v}: must be positive")));
            }
        }
        if let Some(k) = m.kappa {
            if !(k >= 0.0) || !k.is_finite() {
                return Err(range("model.kappa", format!("{k}: must be >= 0")));
            }
        }
        self.protocol_options()
            .validate()
            .map_err(|e| range("protocol", e.to_string()))?;
        let t = &self.truncation;
        for (key, d) in [
            ("truncation.cavity", t.cavity),
            ("truncation.mode_i", t.mode_i),
            ("truncation.mode_r", t.mode_r),
            ("truncation.mode_s", t.mode_s),
            ("truncation.thermal_mode_i", t.thermal_mode_i),
        ] {
            if !(2..=64).contains(&d) {
                return Err(range(key, format!("{d}: must be in [2, 64]")));
            }
        }
        let i = &self.integrator;
        for (key, v) in [
            ("integrator.rk4_step", i.rk4_step),
            ("integrator.rel_tol", i.rel_tol),
            ("integrator.abs_tol", i.abs_tol),
            ("integrator.max_step", i.max_step),
        ] {
            if !(v > 0.0) || v.is_nan() {
                return Err(range(key, format!("{v}: must be > 0")));
            }
        }
        if i.samples == 0 {
            return Err(range("integrator.samples", "must be >= 1"));
        }
        if i.positivity_every == 0 {
            return Err(range("integrator.positivity_every", "must be >= 1"));
        }
        let floor = self.fidelity.calibration_floor;
        if !(0.0..=1.0).contains(&floor) {
            return Err(range(
                "fidelity.calibration_floor",
                format!("{floor}: must lie in [0, 1]"),
            ));
        }
        let s = &self.sweep;
        if s.points == 0 {
            return Err(range("sweep.points", "must be >= 1"));
        }
        if !(s.ratio_min > 0.0) || !(s.ratio_max >= s.ratio_min) || !s.ratio_max.is_finite() {
            return Err(range("sweep.ratio_min", "need 0 < ratio_min <= ratio_max"));
        }
        let q = &self.qsweep;
        if q.points == 0 {
            return Err(range("qsweep.points", "must be >= 1"));
        }
        if !(q.q_min > 0.0) || !(q.q_max >= q.q_min) || !q.q_max.is_finite() {
            return Err(range("qsweep.q_min", "need 0 < q_min <= q_max"));
        }
        Ok(())
    }

    pub fn geometry(&self) -> CavityGeometry {
        let c = &self.cavity;
        CavityGeometry {
            length: c.length,
            electrode_gap: c.electrode_gap,
            epsilon_r: c.epsilon_r,
            mode_index: c.mode_index,
            quality_factor: c.quality_factor,
        }
    }

    pub fn rydberg_pair(&self) -> RydbergPair {
        RydbergPair {
            n: self.rydberg.n,
            defect_s: self.rydberg.defect_s,
            defect_p: self.rydberg.defect_p,
        }
    }

    pub fn chain_inputs(&self) -> ChainInputs {
        let c = &self.chain;
        ChainInputs {
            geometry: self.geometry(),
            rydberg: self.rydberg_pair(),
            dipole_ir: c.dipole_ir,
            mode_function: c.mode_function,
            n_atoms: self.model.n_atoms,
            omega_sg: c.omega_sg,
            magnetic_collective_rate: c.magnetic_collective_rate,
            magnetic_cavity_lifetime: c.magnetic_cavity_lifetime,
            eta_qc: self.model.eta_qc,
            omega_rs: self.model.omega_rs,
            detuning_ratio: c.detuning_ratio,
            dipole_qubit: c.dipole_qubit,
        }
    }

    /// κ = ω_c/Q unless given explicitly.
    pub fn kappa(&self) -> f64 {
        self.model.kappa.unwrap_or_else(|| {
            let g = self.geometry();
            crate::params::cavity_decay_rate(
                crate::params::cavity_mode_frequency(&g).value,
                g.quality_factor,
            )
        })
    }

    /// Uncompensated parameters at the given n̄.
    pub fn base_params(&self, n_bar: f64) -> SystemParams {
        let m = &self.model;
        SystemParams {
            eta_qc: m.eta_qc,
            eta_ac: m.eta_ac,
            omega_gi: m.omega_gi,
            omega_rs: m.omega_rs,
            delta_qc: m.delta_qc,
            delta_ig: m.delta_ig,
            delta_ri: m.delta_ri,
            delta_ac: m.delta_ac,
            delta_s: m.delta_s,
            n_atoms: m.n_atoms,
            kappa: self.kappa(),
            n_bar,
            gamma_1: m.gamma_1,
            gamma_phi: m.gamma_phi,
            gamma_r: m.gamma_r,
            gamma_s: m.gamma_s,
        }
    }

    /// Parameters of the Rydberg transfer model, compensated if requested.
    pub fn transfer_params(&self, n_bar: f64) -> SystemParams {
        let p = self.base_params(n_bar);
        if self.model.compensate {
            p.resonance_compensated(true)
        } else {
            p
        }
    }

    pub fn protocol_options(&self) -> ProtocolOptions {
        let p = &self.protocol;
        ProtocolOptions {
            ramp_time: p.ramp_time,
            ramp_steps: p.ramp_steps,
            gap: p.gap,
        }
    }

    /// Truncation for a run at n̄; thermal runs use `thermal_mode_i` and may raise the cavity.
    pub fn truncation_for(&self, n_bar: f64) -> Truncation {
        let t = &self.truncation;
        let mut out = Truncation {
            cavity: t.cavity,
            mode_i: t.mode_i,
            mode_r: t.mode_r,
            mode_s: t.mode_s,
        };
        if n_bar > 0.0 {
            out.mode_i = t.thermal_mode_i;
            if t.auto_cavity {
                out = out.with_thermal_cavity(n_bar);
            }
        }
        out
    }

    pub fn integrator_config(&self) -> IntegratorConfig {
        let i = &self.integrator;
        IntegratorConfig {
            method: match i.method {
                MethodName::Chebyshev => Method::Chebyshev,
                MethodName::Dopri45 => Method::DormandPrince45,
                MethodName::Rk4 => Method::Rk4 { step: i.rk4_step },
            },
            rel_tol: i.rel_tol,
            abs_tol: i.abs_tol,
            max_step: i.max_step,
            samples: SampleGrid::Uniform(i.samples),
            check_invariants: i.check_invariants,
            positivity_every: i.positivity_every,
            tolerances: InvariantTolerances::default(),
            lanczos_iterations: i.lanczos_iterations,
        }
    }

    pub fn reconstruction(&self) -> Reconstruction {
        match self.fidelity.reconstruction {
            ReconstructionName::Sectors => Reconstruction::ChargeSectors,
            ReconstructionName::FourState => Reconstruction::FourState,
            ReconstructionName::Direct => Reconstruction::Direct,
        }
    }
}

fn merge(base: &mut toml::Value, update: toml::Value) {
    match (base, update) {
        (toml::Value::Table(b), toml::Value::Table(u)) => {
            for (k, v) in u {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_table() && v.is_table() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, u) => *b = u,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
        assert!((1.0 / cfg.kappa() - 13e-6).abs() < 0.2e-6);
    }

    #[test]
    fn single_override_changes_one_field() {
        let cfg = parse_config("# thermal\nmodel.n_bar = 0.5\n").unwrap();
        let mut want = ScenarioConfig::default();
        want.model.n_bar = Some(0.5);
        assert_eq!(cfg, want);
    }

    #[test]
    fn tables_and_dotted_keys_are_equivalent() {
        let a = parse_config("[truncation]\ncavity = 8\n[integrator]\nmethod = \"rk4\"\n").unwrap();
        let b = parse_config("truncation.cavity = 8\nintegrator.method = \"rk4\"").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.truncation.cavity, 8);
        assert_eq!(a.integrator.method, MethodName::Rk4);
    }

    #[test]
    fn negative_kappa_is_a_range_error() {
        let err = parse_config("model.kappa = -1").unwrap_err();
        assert!(
            matches!(&err, Error::ConfigRange { key, .. } if key == "model.kappa"),
            "{err}"
        );
        assert!(err.is_config_error());
    }

    #[test]
    fn unknown_keys_carry_their_line() {
        let err = parse_config("model.n_bar = 0.1\n\nmodel.nbar = 0.5\n").unwrap_err();
        match err {
            Error::UnknownKey { key, line } => {
                assert_eq!(key, "model.nbar");
                assert_eq!(line, 3);
            }
            other => panic!("{other}"),
        }
        assert!(matches!(
            parse_config("bogus = 1"),
            Err(Error::UnknownKey { .. })
        ));
    }

    #[test]
    fn syntax_errors_carry_their_line() {
        let err = parse_config("model.n_bar = 0.1\nmodel.kappa = = 2\n").unwrap_err();
        assert!(matches!(err, Error::ConfigSyntax { line: 2, .. }), "{err}");
        let err = parse_config("model.n_bar = \"warm\"").unwrap_err();
        assert!(matches!(err, Error::ConfigSyntax { line: 1, .. }), "{err}");
    }

    #[test]
    fn overrides_take_bare_words() {
        let mut cfg = ScenarioConfig::default();
        cfg.apply_override("integrator.method=dopri45").unwrap();
        cfg.apply_override("model.n_bar = 0.25").unwrap();
        cfg.apply_override("scenario=roundtrip").unwrap();
        assert_eq!(cfg.integrator.method, MethodName::Dopri45);
        assert_eq!(cfg.model.n_bar, Some(0.25));
        assert_eq!(cfg.scenario, Some(Scenario::Roundtrip));
        assert!(matches!(
            cfg.apply_override("model.nope=1"),
            Err(Error::UnknownKey { .. })
        ));
        assert!(matches!(
            cfg.apply_override("truncation.cavity=1"),
            Err(Error::ConfigRange { .. })
        ));
        assert!(cfg.apply_override("no equals sign").is_err());
        assert_eq!(cfg.model.n_bar, Some(0.25));
    }

    #[test]
    fn resolved_text_round_trips() {
        let mut cfg = parse_config(
            "model.n_bar = 0.3\ncavity.quality_factor = 2e5\nintegrator.max_step = 1e-9",
        )
        .unwrap();
        cfg.scenario = Some(Scenario::Fig4Sweep);
        let again = parse_config(&cfg.to_text()).unwrap();
        assert_eq!(again, cfg);
        let default_text = ScenarioConfig::default().to_text();
        assert_eq!(
            parse_config(&default_text).unwrap(),
            ScenarioConfig::default()
        );
    }

    #[test]
    fn quality_factor_sets_kappa() {
        let cfg = parse_config("cavity.quality_factor = 1e5").unwrap();
        assert!((cfg.kappa() * 13e-6 - 10.0).abs() < 0.2);
        let explicit = parse_config("cavity.quality_factor = 1e5\nmodel.kappa = 5e4").unwrap();
        assert_eq!(explicit.kappa(), 5e4);
    }

    #[test]
    fn thermal_truncation() {
        let cfg = ScenarioConfig::default();
        let t = cfg.truncation_for(0.5);
        assert_eq!(t.mode_i, 2);
        assert!(
            crate::hilbert::thermal_tail(0.5, t.cavity) < crate::hilbert::THERMAL_TAIL_TOLERANCE
        );
        assert_eq!(cfg.truncation_for(0.0), Truncation::default());
    }

    #[test]
    fn scenario_names() {
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
        assert!("fig5".parse::<Scenario>().is_err());
    }
}
