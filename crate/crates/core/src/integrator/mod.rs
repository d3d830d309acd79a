// Copyright 2026 hybridq Contributors
// SPDX-License-Identifier: Apache-2.0

//! Time evolution of density matrices under piecewise-constant Lindbladians.
//!
//! Each schedule segment fixes the controls, so the generator is constant on
//! it. The default method expands e^{hL} in Chebyshev polynomials; adaptive
//! Dormand–Prince and fixed-step RK4 are available for cross-checks.

pub mod chebyshev;
pub mod generator;
pub mod oracle;
pub mod rk;
pub mod sectors;

use std::collections::HashMap;

use crate::error::{Error, Result};
use std::sync::Arc;

use crate::hilbert::{DensityMatrix, Operator, SpaceLayout, Subsystem};
use crate::linalg::{self, CMatrix, C64};
use crate::model::{CollapseOperator, Control, TransferModel};
use crate::pulses::{ControlValues, PulseSchedule};

pub use chebyshev::ChebyshevWorkspace;
pub use generator::Generator;
pub use oracle::expm_oracle;
pub use sectors::{BlockPattern, ChargeBasis};

#[derive(Clone, Debug, PartialEq)]
pub enum Method {
    Chebyshev,
    DormandPrince45,
    Rk4 { step: f64 },
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Chebyshev => "chebyshev",
            Method::DormandPrince45 => "dopri45",
            Method::Rk4 { .. } => "rk4",
        }
    }
}

/// Times at which observables are recorded.
#[derive(Clone, Debug, PartialEq)]
pub enum SampleGrid {
    /// n equal intervals over the schedule, n + 1 points including both ends.
    Uniform(usize),
    /// Explicit times in [0, T], strictly increasing.
    Times(Vec<f64>),
}

impl SampleGrid {
    pub fn resolve(&self, total: f64) -> Result<Vec<f64>> {
        match self {
            SampleGrid::Uniform(0) => Err(Error::InvalidParameter {
                name: "samples",
                value: 0.0,
                reason: "need at least one interval",
            }),
            SampleGrid::Uniform(n) => {
                let mut times: Vec<f64> = (0..*n).map(|k| total * k as f64 / *n as f64).collect();
                times.push(total);
                Ok(times)
            }
            SampleGrid::Times(times) => {
                for w in times.windows(2) {
                    if !(w[1] > w[0]) {
                        return Err(Error::InvalidParameter {
                            name: "samples",
                            value: w[1],
                            reason: "sample times must increase strictly",
                        });
                    }
                }
                if let Some(&t) = times.iter().find(|&&t| !(0.0..=total).contains(&t)) {
                    return Err(Error::TimeOutOfRange { t, end: total });
                }
                Ok(times.clone())
            }
        }
    }
}

/// Bounds checked on the state at every sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvariantTolerances {
    pub trace: f64,
    pub hermiticity: f64,
    /// Allowed negative eigenvalue magnitude.
    pub positivity: f64,
    /// Allowed excess of tr ρ² over 1.
    pub purity: f64,
}

impl Default for InvariantTolerances {
    fn default() -> Self {
        Self {
            trace: 1e-6,
            hermiticity: 1e-8,
            positivity: 1e-7,
            purity: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub samples: SampleGrid,
    pub check_invariants: bool,
    /// Run the Cholesky positivity test only at every n-th sample (and the last).
    pub positivity_every: usize,
    pub tolerances: InvariantTolerances,
    /// Lanczos steps used to tighten the Chebyshev width; 0 keeps the Gershgorin bound.
    pub lanczos_iterations: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Chebyshev,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: f64::INFINITY,
            samples: SampleGrid::Uniform(100),
            check_invariants: true,
            positivity_every: 1,
            tolerances: InvariantTolerances::default(),
            lanczos_iterations: 40,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name, v: f64| {
            if v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    value: v,
                    reason: "must be positive",
                })
            }
        };
        positive("rel_tol", self.rel_tol)?;
        positive("abs_tol", self.abs_tol)?;
        positive("max_step", self.max_step)?;
        if let Method::Rk4 { step } = self.method {
            positive("rk4 step", step)?;
            if !step.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "rk4 step",
                    value: step,
                    reason: "must be finite",
                });
            }
        }
        if self.positivity_every == 0 {
            return Err(Error::InvalidParameter {
                name: "positivity_every",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        Ok(())
    }
}

/// Emitted after every internal step, for instrumentation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepEvent {
    pub segment: usize,
    pub t_start: f64,
    pub t_end: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PropagationStats {
    pub steps: usize,
    pub generator_applications: usize,
    pub divergence_retries: usize,
}

/// Sampled observables and the final state.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Qubit excited-state population.
    pub pq: Vec<f64>,
    pub nc: Vec<f64>,
    pub ni: Vec<f64>,
    pub nr: Vec<f64>,
    pub ns: Vec<f64>,
    pub trace: Vec<f64>,
    pub purity: Vec<f64>,
    pub final_state: DensityMatrix,
    pub stats: PropagationStats,
}

impl Trajectory {
    fn with_capacity(n: usize, state: DensityMatrix) -> Self {
        let v = || Vec::with_capacity(n);
        Self {
            times: v(),
            pq: v(),
            nc: v(),
            ni: v(),
            nr: v(),
            ns: v(),
            trace: v(),
            purity: v(),
            final_state: state,
            stats: PropagationStats::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Column by CSV name.
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        Some(match name {
            "t" => &self.times,
            "pq" => &self.pq,
            "nc" => &self.nc,
            "ni" => &self.ni,
            "nr" => &self.nr,
            "ns" => &self.ns,
            "trace" => &self.trace,
            "purity" => &self.purity,
            _ => return None,
        })
    }

    /// Largest sampled value of a column.
    pub fn peak(&self, name: &str) -> Option<(f64, f64)> {
        let col = self.column(name)?;
        col.iter()
            .zip(&self.times)
            .fold(None, |best: Option<(f64, f64)>, (&v, &t)| match best {
                Some((bv, _)) if bv >= v => best,
                _ => Some((v, t)),
            })
            .map(|(v, t)| (t, v))
    }
}

/// A model compiled for propagation: dense operators plus the charge basis.
pub struct PreparedModel {
    basis: Arc<ChargeBasis>,
    static_part: CMatrix,
    controls: Vec<(Control, CMatrix)>,
    jumps: Vec<CMatrix>,
    shifts: Vec<isize>,
    lanczos_iterations: usize,
}

impl PreparedModel {
    /// Uses the excitation-number sectors when the model respects them and a
    /// single sector otherwise.
    pub fn new(model: &TransferModel, lanczos_iterations: usize) -> Self {
        let h = &model.hamiltonian;
        let static_part = h.static_part().matrix().clone();
        let controls: Vec<(Control, CMatrix)> = h
            .controls()
            .iter()
            .map(|(c, op)| (*c, op.matrix().clone()))
            .collect();
        let jumps: Vec<CMatrix> = model
            .collapse
            .iter()
            .map(|c| c.operator.matrix().mapv(|z| z * c.rate.sqrt()))
            .collect();
        let excitation = ChargeBasis::excitation_number(&model.layout);
        let shifts_in = |basis: &ChargeBasis| -> Option<Vec<isize>> {
            let conserving = std::iter::once(&static_part)
                .chain(controls.iter().map(|(_, m)| m))
                .all(|m| basis.shift_of(m) == Some(0));
            if !conserving {
                return None;
            }
            jumps.iter().map(|l| basis.shift_of(l)).collect()
        };
        let (basis, shifts) = match shifts_in(&excitation) {
            Some(shifts) => (excitation, shifts),
            None => {
                let trivial = ChargeBasis::trivial(model.layout.total_dim());
                (trivial, vec![0; jumps.len()])
            }
        };
        Self {
            basis: Arc::new(basis),
            static_part,
            controls,
            jumps,
            shifts,
            lanczos_iterations,
        }
    }

    pub fn basis(&self) -> &Arc<ChargeBasis> {
        &self.basis
    }

    /// Blocks reachable from the nonzero blocks of `rho`.
    pub fn pattern_for(&self, rho: &CMatrix) -> Arc<BlockPattern> {
        Arc::new(BlockPattern::for_state(&self.basis, rho, &self.shifts))
    }

    pub fn hamiltonian(&self, values: &ControlValues) -> CMatrix {
        let mut h = self.static_part.clone();
        for (c, m) in &self.controls {
            let u = values.angular(*c);
            if u != 0.0 {
                h.scaled_add(C64::new(u, 0.0), m);
            }
        }
        h
    }

    pub fn generator(
        &self,
        pattern: &Arc<BlockPattern>,
        values: &ControlValues,
    ) -> Result<Generator> {
        let mut gen = Generator::new(&self.basis, pattern, &self.hamiltonian(values), &self.jumps)?;
        if self.lanczos_iterations > 0 {
            gen.refine_width(self.lanczos_iterations, 0.02);
        }
        Ok(gen)
    }
}

fn control_key(v: &ControlValues) -> [u64; 3] {
    [
        v.delta_qc_hz.to_bits(),
        v.omega_gi_hz.to_bits(),
        v.omega_rs_hz.to_bits(),
    ]
}

pub fn propagate(
    rho0: &DensityMatrix,
    schedule: &PulseSchedule,
    model: &TransferModel,
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    propagate_observed(rho0, schedule, model, config, &mut |_| {})
}

/// Observables and invariant checks on block-stored states.
struct Sampler<'a> {
    basis: &'a ChargeBasis,
    pattern: &'a BlockPattern,
    layout: &'a Arc<SpaceLayout>,
    tables: Vec<Option<Vec<usize>>>,
    config: &'a IntegratorConfig,
    n_samples: usize,
}

impl Sampler<'_> {
    fn record(&self, t: f64, idx: usize, x: &[C64], traj: &mut Trajectory) -> Result<()> {
        let (trace, purity, herm) = sectors::block_invariants(self.pattern, x);
        if self.config.check_invariants {
            let tl = &self.config.tolerances;
            let drift = (trace - C64::new(1.0, 0.0)).norm();
            if !(drift <= tl.trace) {
                return Err(Error::InvariantViolation {
                    t,
                    what: "trace drift",
                    value: drift,
                });
            }
            if !(herm <= tl.hermiticity) {
                return Err(Error::InvariantViolation {
                    t,
                    what: "hermiticity residual",
                    value: herm,
                });
            }
            if !(purity <= 1.0 + tl.purity) {
                return Err(Error::InvariantViolation {
                    t,
                    what: "purity above one",
                    value: purity,
                });
            }
            let last = idx + 1 == self.n_samples;
            if idx % self.config.positivity_every == 0 || last {
                let m = sectors::compressed(self.basis, self.pattern, x);
                if !linalg::is_positive_shifted(m.view(), tl.positivity) {
                    let lam = linalg::hermitian_eigenvalues(m.view())[0];
                    return Err(Error::InvariantViolation {
                        t,
                        what: "negative eigenvalue",
                        value: lam,
                    });
                }
            }
        }
        let mut obs = [0.0; 5];
        let mut residue: f64 = 0.0;
        for b in self.pattern.blocks().iter().filter(|b| b.is_diagonal()) {
            for (i, &g) in self.basis.sector(b.row).iter().enumerate() {
                let p = x[b.offset + i * b.cols + i];
                for (o, table) in obs.iter_mut().zip(&self.tables) {
                    if let Some(table) = table {
                        *o += p.re * table[g] as f64;
                    }
                }
                residue = residue.max(p.im.abs());
            }
        }
        if self.config.check_invariants && residue > OBSERVABLE_RESIDUE {
            return Err(Error::InvariantViolation {
                t,
                what: "imaginary population",
                value: residue,
            });
        }
        traj.times.push(t);
        traj.pq.push(obs[0]);
        traj.nc.push(obs[1]);
        traj.ni.push(obs[2]);
        traj.nr.push(obs[3]);
        traj.ns.push(obs[4]);
        traj.trace.push(trace.re);
        traj.purity.push(purity);
        Ok(())
    }

    fn state(&self, x: &[C64]) -> Result<DensityMatrix> {
        DensityMatrix::from_matrix(
            self.layout.clone(),
            sectors::unpack(self.basis, self.pattern, x),
        )
    }
}

/// Largest imaginary part tolerated on a sampled population.
const OBSERVABLE_RESIDUE: f64 = 1e-10;

/// Like [`propagate`], calling `observer` after every internal step.
pub fn propagate_observed(
    rho0: &DensityMatrix,
    schedule: &PulseSchedule,
    model: &TransferModel,
    config: &IntegratorConfig,
    observer: &mut dyn FnMut(&StepEvent),
) -> Result<Trajectory> {
    config.validate()?;
    let layout = rho0.layout().clone();
    if layout.as_ref() != model.layout.as_ref() {
        return Err(Error::DimensionMismatch {
            expected: model.layout.total_dim(),
            found: layout.total_dim(),
        });
    }
    let herm = rho0.hermiticity_residual();
    if herm > config.tolerances.hermiticity {
        return Err(Error::InvariantViolation {
            t: 0.0,
            what: "initial hermiticity",
            value: herm,
        });
    }
    let total = schedule.total_duration();
    let samples = config.samples.resolve(total)?;
    let prepared = PreparedModel::new(model, config.lanczos_iterations);
    let basis = prepared.basis().clone();
    let pattern = prepared.pattern_for(rho0.matrix());
    let mut x = sectors::pack(&basis, &pattern, rho0.matrix());

    // Every interval lies inside one segment and ends on a boundary or sample.
    let mut breaks: Vec<f64> = schedule.boundaries();
    breaks.extend(samples.iter().copied());
    breaks.sort_by(|a, b| a.total_cmp(b));
    breaks.dedup();

    let sampler = Sampler {
        basis: &basis,
        pattern: &pattern,
        layout: &layout,
        tables: Subsystem::ALL
            .iter()
            .map(|&s| layout.occupation_table(s))
            .collect(),
        config,
        n_samples: samples.len(),
    };
    let mut traj = Trajectory::with_capacity(samples.len(), rho0.clone());
    let mut sample_iter = samples.iter().copied().enumerate().peekable();
    let mut generators: HashMap<[u64; 3], Generator> = HashMap::new();
    let n = pattern.len();
    let mut cheb = matches!(config.method, Method::Chebyshev).then(|| ChebyshevWorkspace::new(n));
    let mut rkws = (!matches!(config.method, Method::Chebyshev)).then(|| rk::RkWorkspace::new(n));
    let tol = rk::Tolerances {
        rel: config.rel_tol,
        abs: config.abs_tol,
        max_step: config.max_step,
    };

    if let Some(&(idx, t)) = sample_iter.peek() {
        if t == breaks[0] {
            sampler.record(t, idx, &x, &mut traj)?;
            sample_iter.next();
        }
    }
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let seg_idx = schedule.segment_index_at(a)?;
        let seg = &schedule.segments()[seg_idx];
        let key = control_key(&seg.controls);
        let gen = match generators.entry(key) {
            std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(prepared.generator(&pattern, &seg.controls)?)
            }
        };
        let stats = &mut traj.stats;
        match &config.method {
            Method::Chebyshev => {
                let ws = cheb.as_mut().expect("chebyshev workspace");
                chebyshev_interval(gen, &mut x, a, b, ws, stats, seg_idx, observer)?;
            }
            Method::DormandPrince45 => {
                let ws = rkws.as_mut().expect("rk workspace");
                let n = rk::dopri45(gen, &mut x, a, b, &tol, ws, |t0, t1| {
                    stats.steps += 1;
                    observer(&StepEvent {
                        segment: seg_idx,
                        t_start: t0,
                        t_end: t1,
                    });
                })?;
                stats.generator_applications += n;
            }
            Method::Rk4 { step } => {
                let ws = rkws.as_mut().expect("rk workspace");
                let n = rk::rk4(gen, &mut x, a, b, *step, ws, |t0, t1| {
                    stats.steps += 1;
                    observer(&StepEvent {
                        segment: seg_idx,
                        t_start: t0,
                        t_end: t1,
                    });
                });
                stats.generator_applications += n;
            }
        }
        if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvariantViolation {
                t: b,
                what: "non-finite state",
                value: f64::NAN,
            });
        }
        sectors::rehermitize(&pattern, &mut x);
        if let Some(&(idx, t)) = sample_iter.peek() {
            if t == b {
                sampler.record(t, idx, &x, &mut traj)?;
                sample_iter.next();
            }
        }
    }
    traj.final_state = sampler.state(&x)?;
    Ok(traj)
}

const MAX_DIVERGENCE_RETRIES: usize = 6;

#[allow(clippy::too_many_arguments)]
fn chebyshev_interval(
    gen: &mut Generator,
    rho: &mut [C64],
    t0: f64,
    t_end: f64,
    ws: &mut ChebyshevWorkspace,
    stats: &mut PropagationStats,
    segment: usize,
    observer: &mut dyn FnMut(&StepEvent),
) -> Result<()> {
    let duration = t_end - t0;
    let backup = rho.to_vec();
    for _attempt in 0..=MAX_DIVERGENCE_RETRIES {
        let w = gen.spectral_width();
        let n = ((duration * w) / chebyshev::MAX_Z).ceil().max(1.0) as usize;
        let h = duration / n as f64;
        let mut ok = true;
        let mut applications = 0;
        for _ in 0..n {
            match chebyshev::step(gen, rho, h, ws) {
                chebyshev::StepOutcome::Done { applications: a } => applications += a,
                chebyshev::StepOutcome::Diverged => {
                    ok = false;
                    break;
                }
            }
        }
        stats.generator_applications += applications;
        if ok {
            stats.steps += n;
            for k in 0..n {
                let ta = t0 + k as f64 * h;
                let tb = if k + 1 == n {
                    t_end
                } else {
                    t0 + (k + 1) as f64 * h
                };
                observer(&StepEvent {
                    segment,
                    t_start: ta,
                    t_end: tb,
                });
            }
            return Ok(());
        }
        stats.divergence_retries += 1;
        rho.copy_from_slice(&backup);
        gen.set_spectral_width(w * 1.5);
    }
    Err(Error::InvariantViolation {
        t: t0,
        what: "chebyshev divergence",
        value: gen.spectral_width(),
    })
}

/// Dense reference right-hand side −i[H, ρ] + Σ_k γ_k (L_k ρ L_k† − ½{L_k†L_k, ρ}).
pub fn lindblad_rhs(rho: &CMatrix, h: &Operator, collapse: &[CollapseOperator]) -> CMatrix {
    let minus_i = C64::new(0.0, -1.0);
    let mut out = linalg::commutator(h.matrix().view(), rho.view()).mapv(|z| z * minus_i);
    for c in collapse {
        let l = c.operator.matrix();
        let ld = linalg::dagger(l.view());
        let ldl = ld.dot(l);
        let term = l.dot(rho).dot(&ld) - (ldl.dot(rho) + rho.dot(&ldl)).mapv(|z| z * 0.5);
        out = out + term.mapv(|z| z * c.rate);
    }
    out
}

/// Largest |entry| difference between two flattened matrices.
pub fn max_abs_difference(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
