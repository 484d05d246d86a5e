//! Simulation of the transverse-field Ising crossover in a trapped-ion chain.
//!
//! The pipeline runs in five stages:
//!
//! * [`chain`] computes equilibrium positions, transverse normal modes, Lamb-Dicke factors,
//!   phonon-mediated Ising couplings and their power-law range.
//! * [`dynamics`] evolves Monte-Carlo wave-function trajectories through an
//!   exponential field ramp. It includes spontaneous emission with leakage and
//!   dephasing jumps, and deterministic parallel ensembles.
//! * [`observables`] provides the magnetization, Binder cumulant and their
//!   finite-size scaling. It also has an exact total-spin ground-state solver
//!   and a small-N master-equation reference.
//! * [`detect`] models photon-count histograms, fits them to spin
//!   distributions and attaches Monte-Carlo error bars.
//! * [`cli`] handles configuration, command dispatch and reproducible CSV/JSON
//!   output, shared by the `ionsim` binary and the examples.
//!
//! Frequencies are in kHz, times in microseconds, and jump rates per
//! millisecond.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod cli;
pub mod detect;
pub mod dynamics;
pub mod error;
pub mod observables;

pub use error::{Error, Result};
