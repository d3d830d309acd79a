// Copyright 2026 hybridq Contributors
// SPDX-License-Identifier: Apache-2.0

//! Lindblad simulation of quantum-state transfer from a superconducting qubit
//! through a microwave cavity into a collective atomic excitation.

// Range checks are written as negated comparisons so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// `is_multiple_of` postdates the supported toolchain.
#![allow(clippy::manual_is_multiple_of)]

pub mod error;
pub mod experiments;
pub mod fidelity;
pub mod hilbert;
pub mod integrator;
pub mod linalg;
pub mod model;
pub mod params;
pub mod pulses;

pub use error::{Error, Result};
