//! Ground-state blockade of Rydberg atoms: Hamiltonians, open-system dynamics,
//! adiabatic-passage pulses and cavity feedback, with presets reproducing the
//! blockade, state-transfer and entanglement-preparation results.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod models;
pub mod parallel;
pub mod pulses;
pub mod qspace;

pub use error::{Error, Result};
