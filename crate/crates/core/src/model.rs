// Copyright 2026 hybridq Contributors
// SPDX-License-Identifier: Apache-2.0

//! Hamiltonians and collapse operators of the transfer scenarios.
//!
//! Every builder returns a [`HamiltonianSet`] contribution; contributions are
//! merged into a full model with [`TransferModel::assemble`].

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hilbert::{
    annihilation, creation, embed, embed_product, lowering, number_operator, qubit_sigma_minus,
    qubit_sigma_plus, qubit_sigma_z, Operator, SpaceLayout, Subsystem,
};
use crate::params::{self, two_pi_hz};
use crate::pulses::ControlValues;

/// Relative Frobenius tolerance for Hamiltonian-role operators.
pub const HERMITICITY_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemParams {
    pub eta_qc: f64,
    pub eta_ac: f64,
    /// Single-atom g→i Rabi frequency; the collective drive is √N·omega_gi.
    pub omega_gi: f64,
    pub omega_rs: f64,
    /// Qubit–cavity detuning while the qubit is parked.
    pub delta_qc: f64,
    pub delta_ig: f64,
    pub delta_ri: f64,
    pub delta_ac: f64,
    /// Storage-mode frame detuning; zero is the frame of the printed H_rs.
    pub delta_s: f64,
    pub n_atoms: f64,
    pub kappa: f64,
    pub n_bar: f64,
    pub gamma_1: f64,
    pub gamma_phi: f64,
    pub gamma_r: f64,
    pub gamma_s: f64,
}

/// Park detuning in units of η_qc.
pub const PARK_RATIO: f64 = 40.0;
/// Total qubit dephasing γ_q split equally into γ₁ and γ_φ.
pub const GAMMA_Q: f64 = 1e6;

impl Default for SystemParams {
    fn default() -> Self {
        let eta_qc = two_pi_hz(50e6);
        let eta_ac = two_pi_hz(3.85e6);
        let n_atoms: f64 = 1e6;
        let delta = 10.0 * eta_ac;
        let geometry = params::CavityGeometry::default();
        let kappa = params::cavity_decay_rate(
            params::cavity_mode_frequency(&geometry).value,
            geometry.quality_factor,
        );
        Self {
            eta_qc,
            eta_ac,
            omega_gi: eta_ac / n_atoms.sqrt(),
            omega_rs: two_pi_hz(250e3),
            delta_qc: PARK_RATIO * eta_qc,
            delta_ig: -delta,
            delta_ri: delta,
            delta_ac: 0.0,
            delta_s: 0.0,
            n_atoms,
            kappa,
            n_bar: 0.0,
            gamma_1: 0.5 * GAMMA_Q,
            gamma_phi: 0.5 * GAMMA_Q,
            gamma_r: 1e4,
            gamma_s: 1.0,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("eta_qc", self.eta_qc),
            ("eta_ac", self.eta_ac),
            ("omega_gi", self.omega_gi),
            ("omega_rs", self.omega_rs),
            ("kappa", self.kappa),
            ("n_bar", self.n_bar),
            ("gamma_1", self.gamma_1),
            ("gamma_phi", self.gamma_phi),
            ("gamma_r", self.gamma_r),
            ("gamma_s", self.gamma_s),
        ];
        for (name, v) in rates {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    reason: "rates must be >= 0",
                });
            }
        }
        for (name, v) in [
            ("delta_qc", self.delta_qc),
            ("delta_ig", self.delta_ig),
            ("delta_ri", self.delta_ri),
            ("delta_ac", self.delta_ac),
            ("delta_s", self.delta_s),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    reason: "must be finite",
                });
            }
        }
        if !(self.n_atoms >= 1.0) || !self.n_atoms.is_finite() {
            return Err(Error::InvalidParameter {
                name: "n_atoms",
                value: self.n_atoms,
                reason: "N must be >= 1",
            });
        }
        Ok(())
    }

    /// Intermediate-state detuning Δ = −Δ_ig of the Rydberg ladder.
    pub fn rydberg_detuning(&self) -> f64 {
        -self.delta_ig
    }

    /// √N·η_eff = √N·Ω_gi·η_ac/Δ.
    pub fn rydberg_swap_rate(&self) -> Result<f64> {
        Ok(params::effective_rates(
            self.omega_gi,
            self.eta_ac,
            self.rydberg_detuning(),
            self.n_atoms,
            self.kappa,
        )?
        .collective_swap_rate)
    }

    /// Dispersive pull of the cavity−photon energy by the parked qubit.
    ///
    /// Exact single-excitation shift of the photon-like dressed state,
    /// Δ_qc/2 − sgn(Δ_qc)·√(Δ_qc²/4 + η_qc²).
    pub fn dispersive_pull(&self) -> f64 {
        let d = self.delta_qc;
        if d == 0.0 {
            return 0.0;
        }
        d / 2.0 - d.signum() * (d * d / 4.0 + self.eta_qc * self.eta_qc).sqrt()
    }

    /// Re-tunes Δ_ri and Δ_s so the two-photon cavity→r transition and the
    /// r→s transfer stay resonant.
    ///
    /// The literal Δ_ri = −Δ_ig ignores the light shift η_ac²/Δ of |r⟩ and, when
    /// a parked qubit is present, its dispersive pull on the cavity. Both are
    /// absorbed here. With `with_qubit = false` the pull is omitted.
    pub fn resonance_compensated(&self, with_qubit: bool) -> Self {
        let pull = if with_qubit {
            self.dispersive_pull()
        } else {
            0.0
        };
        let delta = self.rydberg_detuning();
        let light_shift = if delta != 0.0 {
            self.eta_ac * self.eta_ac / delta
        } else {
            0.0
        };
        let r_energy = pull - light_shift;
        Self {
            delta_ri: r_energy - self.delta_ig,
            delta_s: pull,
            ..*self
        }
    }

    pub fn without_dissipation(&self) -> Self {
        Self {
            kappa: 0.0,
            gamma_1: 0.0,
            gamma_phi: 0.0,
            gamma_r: 0.0,
            gamma_s: 0.0,
            ..*self
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Control {
    DeltaQc,
    OmegaGi,
    OmegaRs,
}

impl Control {
    pub const ALL: [Control; 3] = [Control::DeltaQc, Control::OmegaGi, Control::OmegaRs];

    pub fn label(self) -> &'static str {
        match self {
            Control::DeltaQc => "delta_qc",
            Control::OmegaGi => "omega_gi",
            Control::OmegaRs => "omega_rs",
        }
    }
}

impl fmt::Display for Control {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// H(t) = H_static + Σ_k u_k(t)·H_k.
#[derive(Clone, Debug)]
pub struct HamiltonianSet {
    layout: Arc<SpaceLayout>,
    static_part: Operator,
    controls: Vec<(Control, Operator)>,
}

impl HamiltonianSet {
    pub fn empty(layout: &Arc<SpaceLayout>) -> Self {
        Self {
            layout: layout.clone(),
            static_part: Operator::zeros(layout),
            controls: Vec::new(),
        }
    }

    pub fn from_static(static_part: Operator) -> Self {
        Self {
            layout: static_part.layout().clone(),
            static_part,
            controls: Vec::new(),
        }
    }

    pub fn with_control(mut self, c: Control, op: Operator) -> Result<Self> {
        if **op.layout() != *self.layout {
            return Err(Error::DimensionMismatch {
                expected: self.layout.total_dim(),
                found: op.layout().total_dim(),
            });
        }
        self.add_control(c, op);
        Ok(self)
    }

    pub fn layout(&self) -> &Arc<SpaceLayout> {
        &self.layout
    }

    pub fn static_part(&self) -> &Operator {
        &self.static_part
    }

    pub fn controls(&self) -> &[(Control, Operator)] {
        &self.controls
    }

    pub fn control(&self, c: Control) -> Option<&Operator> {
        self.controls
            .iter()
            .find(|(k, _)| *k == c)
            .map(|(_, op)| op)
    }

    fn add_control(&mut self, c: Control, op: Operator) {
        match self.controls.iter_mut().find(|(k, _)| *k == c) {
            Some((_, existing)) => *existing = &*existing + &op,
            None => self.controls.push((c, op)),
        }
    }

    pub fn merge(mut self, other: HamiltonianSet) -> Result<Self> {
        if *other.layout != *self.layout {
            return Err(Error::DimensionMismatch {
                expected: self.layout.total_dim(),
                found: other.layout.total_dim(),
            });
        }
        self.static_part = &self.static_part + &other.static_part;
        for (c, op) in other.controls {
            self.add_control(c, op);
        }
        Ok(self)
    }

    /// H for fixed control values (angular units from the schedule's Hz).
    pub fn at(&self, values: &ControlValues) -> Operator {
        let mut h = self.static_part.clone();
        for (c, op) in &self.controls {
            let u = values.angular(*c);
            if u != 0.0 {
                h = &h + &op.scaled(u);
            }
        }
        h
    }

    pub fn max_hermiticity_residual(&self) -> f64 {
        std::iter::once(&self.static_part)
            .chain(self.controls.iter().map(|(_, op)| op))
            .map(Operator::hermiticity_residual)
            .fold(0.0, f64::max)
    }
}

fn local_ops(
    layout: &Arc<SpaceLayout>,
    sub: Subsystem,
) -> Result<(crate::linalg::CMatrix, crate::linalg::CMatrix)> {
    let d = layout.dim(sub)?;
    Ok((annihilation(d)?, creation(d)?))
}

/// Δ_qc σ⁺σ⁻ (control) − η_qc(σ⁺c + c†σ⁻).
pub fn build_h_qc(p: &SystemParams, layout: &Arc<SpaceLayout>) -> Result<HamiltonianSet> {
    layout.require(&[Subsystem::Qubit, Subsystem::Cavity])?;
    let sp = qubit_sigma_plus();
    let (c, _) = local_ops(layout, Subsystem::Cavity)?;
    let sp_c = embed_product(&[(Subsystem::Qubit, &sp), (Subsystem::Cavity, &c)], layout)?;
    let exchange = sp_c.plus_adjoint();
    let mut set = HamiltonianSet::from_static(exchange.scaled(-p.eta_qc));
    set.add_control(Control::DeltaQc, number_operator(Subsystem::Qubit, layout)?);
    Ok(set)
}

/// Δ_ig i†i + (Δ_ig+Δ_ri) r†r − η_ac(r†ic + h.c.), drive −√N(i† + i) on Ω_gi.
pub fn build_h_ac_rydberg(p: &SystemParams, layout: &Arc<SpaceLayout>) -> Result<HamiltonianSet> {
    layout.require(&[Subsystem::Cavity, Subsystem::ModeI, Subsystem::ModeR])?;
    let (c, _) = local_ops(layout, Subsystem::Cavity)?;
    let (i, _) = local_ops(layout, Subsystem::ModeI)?;
    let (_, r_dag) = local_ops(layout, Subsystem::ModeR)?;
    let n_i = number_operator(Subsystem::ModeI, layout)?;
    let n_r = number_operator(Subsystem::ModeR, layout)?;
    let r_dag_i_c = embed_product(
        &[
            (Subsystem::Cavity, &c),
            (Subsystem::ModeI, &i),
            (Subsystem::ModeR, &r_dag),
        ],
        layout,
    )?;
    let stat = &(&n_i.scaled(p.delta_ig) + &n_r.scaled(p.delta_ig + p.delta_ri))
        - &r_dag_i_c.plus_adjoint().scaled(p.eta_ac);
    let mut set = HamiltonianSet::from_static(stat);
    let drive = embed(&i, Subsystem::ModeI, layout)?
        .plus_adjoint()
        .scaled(-p.n_atoms.sqrt());
    set.add_control(Control::OmegaGi, drive);
    Ok(set)
}

/// Δ_ac s†s + √N η_ac(s†c + c†s).
pub fn build_h_ac_magnetic(p: &SystemParams, layout: &Arc<SpaceLayout>) -> Result<HamiltonianSet> {
    layout.require(&[Subsystem::Cavity, Subsystem::ModeS])?;
    let (c, _) = local_ops(layout, Subsystem::Cavity)?;
    let (_, s_dag) = local_ops(layout, Subsystem::ModeS)?;
    let s_dag_c = embed_product(
        &[(Subsystem::Cavity, &c), (Subsystem::ModeS, &s_dag)],
        layout,
    )?;
    let stat = &number_operator(Subsystem::ModeS, layout)?.scaled(p.delta_ac)
        + &s_dag_c.plus_adjoint().scaled(p.n_atoms.sqrt() * p.eta_ac);
    Ok(HamiltonianSet::from_static(stat))
}

/// −(s†r + r†s) on Ω_rs, plus the storage frame term Δ_s s†s.
pub fn build_h_rs(p: &SystemParams, layout: &Arc<SpaceLayout>) -> Result<HamiltonianSet> {
    layout.require(&[Subsystem::ModeR, Subsystem::ModeS])?;
    let (r, _) = local_ops(layout, Subsystem::ModeR)?;
    let (_, s_dag) = local_ops(layout, Subsystem::ModeS)?;
    let s_dag_r = embed_product(
        &[(Subsystem::ModeR, &r), (Subsystem::ModeS, &s_dag)],
        layout,
    )?;
    let frame = number_operator(Subsystem::ModeS, layout)?.scaled(p.delta_s);
    let mut set = HamiltonianSet::from_static(frame);
    set.add_control(Control::OmegaRs, s_dag_r.plus_adjoint().scaled(-1.0));
    Ok(set)
}

/// √N η_eff(s†σ⁻ + σ⁺s) with η_eff = η_qc η_ac/Δ_qc.
pub fn build_effective_v_qa(p: &SystemParams, layout: &Arc<SpaceLayout>) -> Result<HamiltonianSet> {
    layout.require(&[Subsystem::Qubit, Subsystem::ModeS])?;
    let rates = params::effective_rates(p.eta_qc, p.eta_ac, p.delta_qc, p.n_atoms, p.kappa)?;
    let sm = qubit_sigma_minus();
    let (_, s_dag) = local_ops(layout, Subsystem::ModeS)?;
    let swap = embed_product(
        &[(Subsystem::Qubit, &sm), (Subsystem::ModeS, &s_dag)],
        layout,
    )?
    .plus_adjoint();
    Ok(HamiltonianSet::from_static(
        swap.scaled(rates.collective_swap_rate),
    ))
}

/// √N η_eff(r†c + c†r) with η_eff = Ω_gi η_ac/Δ, switched by the Ω_gi control.
pub fn build_effective_v_ac(p: &SystemParams, layout: &Arc<SpaceLayout>) -> Result<HamiltonianSet> {
    layout.require(&[Subsystem::Cavity, Subsystem::ModeR])?;
    let delta = p.rydberg_detuning();
    // Per unit Ω_gi.
    let rates = params::effective_rates(1.0, p.eta_ac, delta, p.n_atoms, p.kappa)?;
    let (c, _) = local_ops(layout, Subsystem::Cavity)?;
    let (_, r_dag) = local_ops(layout, Subsystem::ModeR)?;
    let swap = embed_product(
        &[(Subsystem::Cavity, &c), (Subsystem::ModeR, &r_dag)],
        layout,
    )?
    .plus_adjoint();
    let mut set = HamiltonianSet::empty(layout);
    set.add_control(Control::OmegaGi, swap.scaled(rates.collective_swap_rate));
    Ok(set)
}

#[derive(Clone, Debug)]
pub struct CollapseOperator {
    pub label: &'static str,
    pub rate: f64,
    /// Unscaled jump operator; the dissipator uses √rate·operator.
    pub operator: Operator,
}

/// {√(κ(1+n̄)) c, √(κn̄) c†, √γ₁ σ⁻, √(γ_φ/2) σ_z, √Γ_R i, √Γ_R r, √γ_s s},
/// restricted to subsystems present and to nonzero rates.
pub fn collapse_operators(
    p: &SystemParams,
    layout: &Arc<SpaceLayout>,
) -> Result<Vec<CollapseOperator>> {
    let mut out = Vec::new();
    let mut push = |label, rate: f64, op: Operator| {
        if rate > 0.0 {
            out.push(CollapseOperator {
                label,
                rate,
                operator: op,
            });
        }
    };
    if layout.contains(Subsystem::Cavity) {
        let c = lowering(Subsystem::Cavity, layout)?;
        push("cavity_decay", p.kappa * (1.0 + p.n_bar), c.clone());
        push("cavity_thermal", p.kappa * p.n_bar, c.adjoint());
    }
    if layout.contains(Subsystem::Qubit) {
        push(
            "qubit_relaxation",
            p.gamma_1,
            lowering(Subsystem::Qubit, layout)?,
        );
        push(
            "qubit_dephasing",
            p.gamma_phi / 2.0,
            embed(&qubit_sigma_z(), Subsystem::Qubit, layout)?,
        );
    }
    if layout.contains(Subsystem::ModeI) {
        push(
            "rydberg_i_decay",
            p.gamma_r,
            lowering(Subsystem::ModeI, layout)?,
        );
    }
    if layout.contains(Subsystem::ModeR) {
        push(
            "rydberg_r_decay",
            p.gamma_r,
            lowering(Subsystem::ModeR, layout)?,
        );
    }
    if layout.contains(Subsystem::ModeS) {
        push(
            "storage_decay",
            p.gamma_s,
            lowering(Subsystem::ModeS, layout)?,
        );
    }
    Ok(out)
}

/// Hamiltonian set plus dissipators on one layout.
#[derive(Clone, Debug)]
pub struct TransferModel {
    pub layout: Arc<SpaceLayout>,
    pub hamiltonian: HamiltonianSet,
    pub collapse: Vec<CollapseOperator>,
}

impl TransferModel {
    pub fn assemble(
        layout: &Arc<SpaceLayout>,
        parts: Vec<HamiltonianSet>,
        collapse: Vec<CollapseOperator>,
    ) -> Result<Self> {
        let mut h = HamiltonianSet::empty(layout);
        for part in parts {
            h = h.merge(part)?;
        }
        let residual = h.max_hermiticity_residual();
        if residual > HERMITICITY_TOLERANCE {
            return Err(Error::InvariantViolation {
                t: 0.0,
                what: "hamiltonian hermiticity",
                value: residual,
            });
        }
        Ok(Self {
            layout: layout.clone(),
            hamiltonian: h,
            collapse,
        })
    }

    /// H_qc + Rydberg H_ac + H_rs on qubit ⊗ cavity ⊗ i ⊗ r ⊗ s.
    pub fn rydberg(p: &SystemParams, layout: &Arc<SpaceLayout>) -> Result<Self> {
        p.validate()?;
        let parts = vec![
            build_h_qc(p, layout)?,
            build_h_ac_rydberg(p, layout)?,
            build_h_rs(p, layout)?,
        ];
        Self::assemble(layout, parts, collapse_operators(p, layout)?)
    }

    /// H_qc (when a qubit is present) + magnetic-dipole H_ac.
    pub fn magnetic(p: &SystemParams, layout: &Arc<SpaceLayout>) -> Result<Self> {
        p.validate()?;
        let mut parts = vec![build_h_ac_magnetic(p, layout)?];
        if layout.contains(Subsystem::Qubit) {
            parts.push(build_h_qc(p, layout)?);
        }
        Self::assemble(layout, parts, collapse_operators(p, layout)?)
    }

    pub fn without_dissipation(&self) -> Self {
        Self {
            collapse: Vec::new(),
            ..self.clone()
        }
    }

    pub fn total_dissipation_rate(&self) -> f64 {
        self.collapse.iter().map(|c| c.rate).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{basis_state, Truncation};
    use crate::linalg;

    fn layout_full(dim: usize) -> Arc<SpaceLayout> {
        SpaceLayout::full(&Truncation {
            cavity: dim,
            mode_i: dim,
            mode_r: dim,
            mode_s: dim,
        })
        .unwrap()
    }

    #[test]
    fn every_contribution_is_hermitian() {
        let p = SystemParams::default();
        let l = layout_full(3);
        for set in [
            build_h_qc(&p, &l).unwrap(),
            build_h_ac_rydberg(&p, &l).unwrap(),
            build_h_ac_magnetic(&p, &l).unwrap(),
            build_h_rs(&p, &l).unwrap(),
            build_effective_v_qa(&p, &l).unwrap(),
            build_effective_v_ac(&p, &l).unwrap(),
        ] {
            assert!(set.max_hermiticity_residual() < HERMITICITY_TOLERANCE);
        }
        let m = TransferModel::rydberg(&p, &l).unwrap();
        let h = m
            .hamiltonian
            .at(&ControlValues::from_angular(1.3e9, 7.0, 2e5));
        assert!(h.is_hermitian(HERMITICITY_TOLERANCE));
    }

    #[test]
    fn missing_subsystems_are_reported() {
        let p = SystemParams::default();
        let l = SpaceLayout::new(vec![(Subsystem::Cavity, 3), (Subsystem::ModeS, 3)]).unwrap();
        assert!(matches!(
            build_h_qc(&p, &l),
            Err(Error::MissingSubsystem(Subsystem::Qubit))
        ));
        assert!(matches!(
            build_h_ac_rydberg(&p, &l),
            Err(Error::MissingSubsystem(Subsystem::ModeI))
        ));
        assert!(matches!(
            build_h_rs(&p, &l),
            Err(Error::MissingSubsystem(Subsystem::ModeR))
        ));
        assert!(build_h_ac_magnetic(&p, &l).is_ok());
    }

    #[test]
    fn zero_detuning_is_rejected_by_effective_models() {
        let p = SystemParams {
            delta_qc: 0.0,
            delta_ig: 0.0,
            ..SystemParams::default()
        };
        let l = layout_full(2);
        assert!(matches!(
            build_effective_v_qa(&p, &l),
            Err(Error::ZeroDetuning)
        ));
        assert!(matches!(
            build_effective_v_ac(&p, &l),
            Err(Error::ZeroDetuning)
        ));
    }

    #[test]
    fn excitation_charge_commutes_with_every_control() {
        // The classically driven i mode carries no charge.
        let p = SystemParams::default();
        let l = layout_full(3);
        let m = TransferModel::rydberg(&p, &l).unwrap();
        let mut charge = Operator::zeros(&l);
        for s in [
            Subsystem::Qubit,
            Subsystem::Cavity,
            Subsystem::ModeR,
            Subsystem::ModeS,
        ] {
            charge = &charge + &number_operator(s, &l).unwrap();
        }
        for dq in [0.0, 1e9] {
            for gi in [0.0, 1e7] {
                for rs in [0.0, 1e6] {
                    let h = m.hamiltonian.at(&ControlValues::from_angular(dq, gi, rs));
                    let norm = h.commutator(&charge).frobenius_norm() / h.frobenius_norm();
                    assert!(norm < 1e-12, "commutator {norm}");
                }
            }
        }
        let with_i = &charge + &number_operator(Subsystem::ModeI, &l).unwrap();
        let h = m.hamiltonian.at(&ControlValues::default());
        assert!(h.commutator(&with_i).frobenius_norm() / h.frobenius_norm() > 1e-3);
    }

    #[test]
    fn photon_number_conserved_without_cavity_coupling() {
        let p = SystemParams {
            eta_ac: 0.0,
            eta_qc: 0.0,
            ..SystemParams::default()
        };
        let l = layout_full(3);
        let m = TransferModel::rydberg(&p, &l).unwrap();
        let h = m
            .hamiltonian
            .at(&ControlValues::from_angular(1e8, 3.0, 1e6));
        let nc = number_operator(Subsystem::Cavity, &l).unwrap();
        assert!(h.commutator(&nc).frobenius_norm() < 1e-9);
    }

    #[test]
    fn collapse_list_contents() {
        let p = SystemParams {
            n_bar: 0.5,
            ..SystemParams::default()
        };
        let l = layout_full(2);
        let ops = collapse_operators(&p, &l).unwrap();
        let labels: Vec<_> = ops.iter().map(|c| c.label).collect();
        assert_eq!(
            labels,
            [
                "cavity_decay",
                "cavity_thermal",
                "qubit_relaxation",
                "qubit_dephasing",
                "rydberg_i_decay",
                "rydberg_r_decay",
                "storage_decay"
            ]
        );
        assert!((ops[0].rate - 1.5 * p.kappa).abs() < 1e-9);
        assert!((ops[3].rate - p.gamma_phi / 2.0).abs() < 1e-12);
        let cold = collapse_operators(&SystemParams::default(), &l).unwrap();
        assert!(cold.iter().all(|c| c.label != "cavity_thermal"));
    }

    #[test]
    fn compensation_keeps_literal_detunings_when_shifts_vanish() {
        let p = SystemParams {
            eta_ac: 0.0,
            delta_qc: 0.0,
            ..SystemParams::default()
        };
        let q = p.resonance_compensated(true);
        assert_eq!(q.delta_ig + q.delta_ri, 0.0);
        assert_eq!(q.delta_s, 0.0);
        let d = SystemParams::default();
        let pull = d.dispersive_pull();
        let approx = -d.eta_qc * d.eta_qc / d.delta_qc;
        assert!((pull - approx).abs() < 0.01 * approx.abs());
    }

    #[test]
    fn basis_energies_on_diagonal() {
        let p = SystemParams::default();
        let l = layout_full(2);
        let m = TransferModel::rydberg(&p, &l).unwrap();
        let h = m
            .hamiltonian
            .at(&ControlValues::from_angular(0.0, 0.0, 0.0));
        let r1 = basis_state(&l, &[0, 0, 0, 1, 0]).unwrap();
        let e = r1.expectation(&h).re;
        assert!((e - (p.delta_ig + p.delta_ri)).abs() < 1e-6);
        assert!(linalg::hermiticity_residual(h.matrix().view()) < 1e-14);
    }
}
