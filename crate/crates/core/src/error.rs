// Copyright 2026 hybridq Contributors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

use crate::hilbert::Subsystem;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension {dim}: {reason}")]
    InvalidDimension { dim: usize, reason: &'static str },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("layout has no {0} subsystem")]
    MissingSubsystem(Subsystem),

    #[error("subsystem {0} appears more than once in the layout")]
    DuplicateSubsystem(Subsystem),

    #[error("occupation {occupation} out of range for {subsystem} (dim {dim})")]
    OccupationOutOfRange {
        subsystem: Subsystem,
        occupation: usize,
        dim: usize,
    },

    #[error(
        "cavity truncation {dim} leaves thermal tail {tail:.3e} above tolerance {tolerance:.1e} \
         at n_bar = {n_bar}"
    )]
    TruncationTooSmall {
        dim: usize,
        n_bar: f64,
        tail: f64,
        tolerance: f64,
    },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("zero detuning: the dispersive elimination needs a detuning; use the resonant model instead")]
    ZeroDetuning,

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("time {t:.6e} s outside schedule span [0, {end:.6e}] s")]
    TimeOutOfRange { t: f64, end: f64 },

    #[error("schedule parse error at line {line}: {message}")]
    ScheduleParse { line: usize, message: String },

    #[error("step size underflow at t = {t:.6e} s (h = {h:.3e} s)")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("invariant violated at t = {t:.6e} s: {what} = {value:.3e}")]
    InvariantViolation {
        t: f64,
        what: &'static str,
        value: f64,
    },

    #[error("vectorized Liouvillian of dimension {dim}^2 exceeds the oracle limit {limit}")]
    OracleTooLarge { dim: usize, limit: usize },

    #[error("charge sector structure violated: {0}")]
    SectorMismatch(String),

    #[error("matrix is singular")]
    Singular,

    #[error("invalid input state: {0}")]
    InvalidInputState(String),

    #[error("calibration failed: noiseless fidelity {fidelity:.6} below floor {floor}")]
    Calibration { fidelity: f64, floor: f64 },

    #[error("missing fidelity for input state {0}")]
    MissingState(&'static str),

    #[error("config error at line {line}: {message}")]
    ConfigSyntax { line: usize, message: String },

    #[error("config error at line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },

    #[error("config value for `{key}` out of range: {message}")]
    ConfigRange { key: String, message: String },

    #[error("{scenario}: {source}")]
    Scenario {
        scenario: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by user input rather than by the numerics.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::ConfigSyntax { .. }
            | Error::UnknownKey { .. }
            | Error::ConfigRange { .. }
            | Error::InvalidParameter { .. }
            | Error::TruncationTooSmall { .. }
            | Error::ScheduleParse { .. }
            | Error::ZeroDetuning => true,
            Error::Scenario { source, .. } => source.is_config_error(),
            _ => false,
        }
    }
}
