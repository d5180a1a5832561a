//! Amplitude-amplified simulation of finite-buffer M/G/1/K queues.
//!
//! The crate is organised bottom-up:
//!
//! * [`dist`]: service-time laws (CDF, moments, discrete hazard, sampling).
//! * [`qcore`]: a small dense statevector engine with the gate set the
//!   queue circuit needs.
//! * [`circuit`]: the slice loop (arrival/service ancillas, guarded
//!   INC/DEC, capacity oracle), Grover amplification around the mean queue
//!   length, measurement and rejection filtering, in an exact statevector
//!   engine and an equivalent traced probability-vector engine.
//! * [`analytic`]: M/M/1/K steady state, the mean queue length and the
//!   error bounds used as references.
//! * [`des`]: the classical discrete-event baseline.
//! * [`metrics`]: fidelity, Jensen-Shannon divergence, total variation,
//!   relative error.
//! * [`cli`]: batch experiment runners behind the `qmg1k` binary.

pub mod analytic;
pub mod circuit;
pub mod cli;
pub mod des;
pub mod dist;
pub mod error;
pub mod metrics;
pub mod qcore;
pub mod seed;

pub use error::{Error, Result};
pub use qcore::{ProbVector, Register, StateVector};
