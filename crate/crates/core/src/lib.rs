//! Exact eigenstates of driven, time-dependent harmonic oscillators built
//! from classical trajectories, the unitary maps between them, and the
//! numerical checks that certify both.

// `!(x > 0.0)` is used on purpose so that NaN is rejected with the bad case.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classical;
pub mod cli;
pub mod error;
pub mod models;
pub mod ode;
pub mod quad;
pub mod scenario;
pub mod spline;
pub mod states;
pub mod suite;
pub mod tolerances;
pub mod transforms;
pub mod verify;

pub use error::{Error, Result};
