// Copyright 2026 hybridq Contributors
// SPDX-License-Identifier: Apache-2.0

//! Piecewise-constant control schedules and the three-step transfer protocol.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{Control, SystemParams};
use crate::params;

/// Control values of one segment, stored in Hz (cycles per second).
///
/// Storing the cycle frequency keeps the text form of a schedule exact;
/// [`ControlValues::angular`] converts on use.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ControlValues {
    pub delta_qc_hz: f64,
    pub omega_gi_hz: f64,
    pub omega_rs_hz: f64,
}

impl ControlValues {
    pub fn from_angular(delta_qc: f64, omega_gi: f64, omega_rs: f64) -> Self {
        let hz = |w: f64| w / (2.0 * PI);
        Self {
            delta_qc_hz: hz(delta_qc),
            omega_gi_hz: hz(omega_gi),
            omega_rs_hz: hz(omega_rs),
        }
    }

    pub fn hz(&self, c: Control) -> f64 {
        match c {
            Control::DeltaQc => self.delta_qc_hz,
            Control::OmegaGi => self.omega_gi_hz,
            Control::OmegaRs => self.omega_rs_hz,
        }
    }

    pub fn angular(&self, c: Control) -> f64 {
        2.0 * PI * self.hz(c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseSegment {
    pub t_start: f64,
    pub duration: f64,
    pub controls: ControlValues,
}

impl PulseSegment {
    pub fn t_end(&self) -> f64 {
        self.t_start + self.duration
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PulseSchedule {
    segments: Vec<PulseSegment>,
}

impl PulseSchedule {
    /// Builds a schedule from consecutive (duration, controls) pairs starting at t = 0.
    pub fn from_durations(parts: &[(f64, ControlValues)]) -> Result<Self> {
        let mut t = 0.0;
        let mut segments = Vec::with_capacity(parts.len());
        for &(duration, controls) in parts {
            segments.push(PulseSegment {
                t_start: t,
                duration,
                controls,
            });
            t += duration;
        }
        Self::new(segments)
    }

    /// Validates contiguity: the first segment starts at 0 and each next start
    /// equals the previous start plus duration, bit for bit.
    pub fn new(segments: Vec<PulseSegment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidSchedule("schedule has no segments".into()));
        }
        let mut expected = 0.0;
        for (k, seg) in segments.iter().enumerate() {
            if !(seg.duration > 0.0) || !seg.duration.is_finite() {
                return Err(Error::InvalidSchedule(format!(
                    "segment {k} has duration {}",
                    seg.duration
                )));
            }
            if seg.t_start != expected {
                return Err(Error::InvalidSchedule(format!(
                    "segment {k} starts at {} but the previous segment ends at {expected}",
                    seg.t_start
                )));
            }
            let c = seg.controls;
            if ![c.delta_qc_hz, c.omega_gi_hz, c.omega_rs_hz]
                .iter()
                .all(|v| v.is_finite())
            {
                return Err(Error::InvalidSchedule(format!(
                    "segment {k} has a non-finite control"
                )));
            }
            expected = seg.t_end();
        }
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[PulseSegment] {
        &self.segments
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.last().map(PulseSegment::t_end).unwrap_or(0.0)
    }

    /// Index of the segment containing t; intervals are right-open except the last.
    pub fn segment_index_at(&self, t: f64) -> Result<usize> {
        let end = self.total_duration();
        if !(t >= 0.0 && t <= end) {
            return Err(Error::TimeOutOfRange { t, end });
        }
        let k = self.segments.partition_point(|s| s.t_start <= t);
        Ok(k.saturating_sub(1).min(self.segments.len() - 1))
    }

    pub fn controls_at(&self, t: f64) -> Result<ControlValues> {
        Ok(self.segments[self.segment_index_at(t)?].controls)
    }

    /// This schedule followed by `other`.
    pub fn then(&self, other: &PulseSchedule) -> Result<Self> {
        let parts: Vec<_> = self
            .segments
            .iter()
            .chain(&other.segments)
            .map(|s| (s.duration, s.controls))
            .collect();
        Self::from_durations(&parts)
    }

    /// Segment boundaries including 0 and T.
    pub fn boundaries(&self) -> Vec<f64> {
        std::iter::once(0.0)
            .chain(self.segments.iter().map(PulseSegment::t_end))
            .collect()
    }

    pub const TEXT_HEADER: &'static str =
        "# t_start_s,duration_s,delta_qc_hz,omega_gi_hz,omega_rs_hz";

    /// One comma-separated line per segment, shortest round-trip float form.
    pub fn to_text(&self) -> String {
        let mut out = String::from(Self::TEXT_HEADER);
        out.push('\n');
        for s in &self.segments {
            let c = s.controls;
            let _ = writeln!(
                out,
                "{:?},{:?},{:?},{:?},{:?}",
                s.t_start, s.duration, c.delta_qc_hz, c.omega_gi_hz, c.omega_rs_hz
            );
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut segments = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 5 {
                return Err(Error::ScheduleParse {
                    line: lineno + 1,
                    message: format!("expected 5 fields, found {}", fields.len()),
                });
            }
            let mut v = [0.0; 5];
            for (slot, f) in v.iter_mut().zip(&fields) {
                *slot = f.parse().map_err(|_| Error::ScheduleParse {
                    line: lineno + 1,
                    message: format!("invalid number `{f}`"),
                })?;
            }
            segments.push(PulseSegment {
                t_start: v[0],
                duration: v[1],
                controls: ControlValues {
                    delta_qc_hz: v[2],
                    omega_gi_hz: v[3],
                    omega_rs_hz: v[4],
                },
            });
        }
        Self::new(segments)
    }
}

/// Shape options for the transfer protocol.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProtocolOptions {
    /// Linear rise and fall time of the Ω_gi pulse (s); 0 gives a square pulse.
    pub ramp_time: f64,
    /// Number of constant steps approximating each ramp.
    pub ramp_steps: usize,
    /// Idle time between consecutive steps (s).
    pub gap: f64,
}

impl Default for ProtocolOptions {
    fn default() -> Self {
        Self {
            ramp_time: 40e-9,
            ramp_steps: 16,
            gap: 0.0,
        }
    }
}

impl ProtocolOptions {
    pub fn square() -> Self {
        Self {
            ramp_time: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ramp_time >= 0.0) || !(self.gap >= 0.0) {
            return Err(Error::InvalidSchedule(
                "ramp time and gap must be >= 0".into(),
            ));
        }
        if self.ramp_time > 0.0 && self.ramp_steps == 0 {
            return Err(Error::InvalidSchedule(
                "ramped pulses need ramp_steps >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// π-pulse durations of the three steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepDurations {
    pub tau_qc: f64,
    pub tau_gr: f64,
    pub tau_rs: f64,
}

pub fn step_durations(p: &SystemParams) -> Result<StepDurations> {
    Ok(StepDurations {
        tau_qc: params::pi_pulse_time("eta_qc", p.eta_qc)?,
        tau_gr: params::pi_pulse_time("collective swap rate", p.rydberg_swap_rate()?)?,
        tau_rs: params::pi_pulse_time("omega_rs", p.omega_rs)?,
    })
}

type Parts = Vec<(f64, ControlValues)>;

fn step_qc(d: &StepDurations) -> Parts {
    vec![(d.tau_qc, ControlValues::default())]
}

/// Ω_gi pulse of area Ω_gi·τ_gr; ramps keep the area by extending the pulse.
fn step_gr(p: &SystemParams, d: &StepDurations, opts: &ProtocolOptions) -> Result<Parts> {
    let parked = ControlValues::from_angular(p.delta_qc, 0.0, 0.0);
    let on = ControlValues {
        omega_gi_hz: ControlValues::from_angular(0.0, p.omega_gi, 0.0).omega_gi_hz,
        ..parked
    };
    if opts.ramp_time == 0.0 {
        return Ok(vec![(d.tau_gr, on)]);
    }
    if opts.ramp_time >= d.tau_gr {
        return Err(Error::InvalidSchedule(format!(
            "ramp time {} must be shorter than the Ω_gi pulse {}",
            opts.ramp_time, d.tau_gr
        )));
    }
    let m = opts.ramp_steps;
    let dt = opts.ramp_time / m as f64;
    let level = |j: usize| ControlValues {
        omega_gi_hz: on.omega_gi_hz * (j as f64 + 0.5) / m as f64,
        ..parked
    };
    let mut parts: Parts = (0..m).map(|j| (dt, level(j))).collect();
    parts.push((d.tau_gr - opts.ramp_time, on));
    parts.extend((0..m).rev().map(|j| (dt, level(j))));
    Ok(parts)
}

fn step_rs(p: &SystemParams, d: &StepDurations) -> Parts {
    vec![(
        d.tau_rs,
        ControlValues::from_angular(p.delta_qc, 0.0, p.omega_rs),
    )]
}

fn idle(p: &SystemParams, opts: &ProtocolOptions) -> Parts {
    if opts.gap > 0.0 {
        vec![(opts.gap, ControlValues::from_angular(p.delta_qc, 0.0, 0.0))]
    } else {
        Vec::new()
    }
}

/// Qubit→cavity swap, cavity→r two-photon pulse, r→s transfer.
pub fn three_step_protocol(p: &SystemParams, opts: &ProtocolOptions) -> Result<PulseSchedule> {
    opts.validate()?;
    let d = step_durations(p)?;
    let mut parts = step_qc(&d);
    parts.extend(idle(p, opts));
    parts.extend(step_gr(p, &d, opts)?);
    parts.extend(idle(p, opts));
    parts.extend(step_rs(p, &d));
    PulseSchedule::from_durations(&parts)
}

/// The three steps in reverse order, retrieving s→r→cavity→qubit.
pub fn reverse_protocol(p: &SystemParams, opts: &ProtocolOptions) -> Result<PulseSchedule> {
    opts.validate()?;
    let d = step_durations(p)?;
    let mut parts = step_rs(p, &d);
    parts.extend(idle(p, opts));
    parts.extend(step_gr(p, &d, opts)?.into_iter().rev());
    parts.extend(idle(p, opts));
    parts.extend(step_qc(&d));
    PulseSchedule::from_durations(&parts)
}

/// A single square segment with the given angular control values.
pub fn constant_schedule(
    duration: f64,
    delta_qc: f64,
    omega_gi: f64,
    omega_rs: f64,
) -> Result<PulseSchedule> {
    PulseSchedule::from_durations(&[(
        duration,
        ControlValues::from_angular(delta_qc, omega_gi, omega_rs),
    )])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_protocol_durations() {
        let p = SystemParams::default();
        let d = step_durations(&p).unwrap();
        assert!((d.tau_qc - 5e-9).abs() < 1e-20);
        assert!((d.tau_gr - 0.65e-6).abs() / 0.65e-6 < 0.02);
        assert!((d.tau_rs - 1e-6).abs() < 1e-18);
        let s = three_step_protocol(&p, &ProtocolOptions::square()).unwrap();
        assert_eq!(s.segments().len(), 3);
        let total = d.tau_qc + d.tau_gr + d.tau_rs;
        assert!((s.total_duration() - total).abs() < 1e-20);
    }

    #[test]
    fn doubling_eta_qc_halves_first_step_only() {
        let p = SystemParams::default();
        let q = SystemParams {
            eta_qc: 2.0 * p.eta_qc,
            ..p
        };
        let (a, b) = (step_durations(&p).unwrap(), step_durations(&q).unwrap());
        assert_eq!(b.tau_qc, a.tau_qc / 2.0);
        assert_eq!(b.tau_gr, a.tau_gr);
        assert_eq!(b.tau_rs, a.tau_rs);
    }

    #[test]
    fn zero_rates_are_rejected() {
        let p = SystemParams {
            omega_rs: 0.0,
            ..SystemParams::default()
        };
        assert!(three_step_protocol(&p, &ProtocolOptions::default()).is_err());
        let p = SystemParams {
            omega_gi: 0.0,
            ..SystemParams::default()
        };
        assert!(three_step_protocol(&p, &ProtocolOptions::default()).is_err());
    }

    #[test]
    fn ramps_preserve_pulse_area() {
        let p = SystemParams::default();
        let d = step_durations(&p).unwrap();
        let s = three_step_protocol(&p, &ProtocolOptions::default()).unwrap();
        let area: f64 = s
            .segments()
            .iter()
            .map(|g| g.duration * g.controls.angular(Control::OmegaGi))
            .sum();
        assert!((area - d.tau_gr * p.omega_gi).abs() / (d.tau_gr * p.omega_gi) < 1e-12);
        assert_eq!(s.segments().len(), 1 + 16 + 1 + 16 + 1);
    }

    #[test]
    fn reverse_mirrors_forward() {
        let p = SystemParams::default();
        let opts = ProtocolOptions {
            gap: 3e-9,
            ..ProtocolOptions::default()
        };
        let f = three_step_protocol(&p, &opts).unwrap();
        let r = reverse_protocol(&p, &opts).unwrap();
        assert_eq!(f.segments().len(), r.segments().len());
        for (a, b) in f.segments().iter().zip(r.segments().iter().rev()) {
            assert_eq!(a.duration, b.duration);
            assert_eq!(a.controls, b.controls);
        }
        assert!((f.total_duration() - r.total_duration()).abs() < 1e-18);
    }

    #[test]
    fn controls_at_uses_right_open_intervals() {
        let p = SystemParams::default();
        let s = three_step_protocol(&p, &ProtocolOptions::square()).unwrap();
        let seg = s.segments();
        assert_eq!(s.controls_at(0.0).unwrap(), seg[0].controls);
        assert_eq!(s.controls_at(seg[1].t_start).unwrap(), seg[1].controls);
        assert_eq!(s.controls_at(s.total_duration()).unwrap(), seg[2].controls);
        assert!(matches!(
            s.controls_at(-1e-12),
            Err(Error::TimeOutOfRange { .. })
        ));
        assert!(s.controls_at(s.total_duration() * 1.0001).is_err());
    }

    #[test]
    fn schedule_rejects_gaps_and_bad_durations() {
        let c = ControlValues::default();
        let bad = vec![
            PulseSegment {
                t_start: 0.0,
                duration: 1.0,
                controls: c,
            },
            PulseSegment {
                t_start: 1.5,
                duration: 1.0,
                controls: c,
            },
        ];
        assert!(PulseSchedule::new(bad).is_err());
        assert!(PulseSchedule::from_durations(&[(0.0, c)]).is_err());
        assert!(PulseSchedule::from_durations(&[]).is_err());
    }

    #[test]
    fn text_roundtrip_is_exact() {
        let p = SystemParams::default();
        let s = three_step_protocol(
            &p,
            &ProtocolOptions {
                gap: 1e-9,
                ..ProtocolOptions::default()
            },
        )
        .unwrap();
        let text = s.to_text();
        let back = PulseSchedule::parse_text(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "# header\n0,1e-9,0,0,0\n1e-9,2e-9,0,abc,0\n";
        match PulseSchedule::parse_text(text) {
            Err(Error::ScheduleParse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            PulseSchedule::parse_text("0,1\n"),
            Err(Error::ScheduleParse { line: 1, .. })
        ));
    }

    proptest! {
        #[test]
        fn random_schedules_roundtrip(durs in proptest::collection::vec((1e-12f64..1e-3, -1e10f64..1e10, 0f64..1e7), 1..12)) {
            let parts: Vec<_> = durs.iter().map(|&(d, a, b)| (d, ControlValues { delta_qc_hz: a, omega_gi_hz: b, omega_rs_hz: a * 1e-3 })).collect();
            let s = PulseSchedule::from_durations(&parts).unwrap();
            prop_assert_eq!(PulseSchedule::parse_text(&s.to_text()).unwrap(), s.clone());
            for w in s.boundaries().windows(2) {
                prop_assert!(w[1] > w[0]);
            }
            let mid = s.segments()[0].t_start + 0.5 * s.segments()[0].duration;
            prop_assert_eq!(s.segment_index_at(mid).unwrap(), 0);
        }
    }
}
