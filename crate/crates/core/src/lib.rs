//! Simulation and design toolkit for a cavity-QED single-photon source built
//! from a silicon-vacancy (SiV) center in an overcoupled diamond nanophotonic
//! cavity.
//!
//! The crate is organised by subsystem:
//!
//! * [`dynamics`]: joint atom-cavity Hamiltonians, Lindblad collapse operators
//!   and an adaptive master-equation integrator.
//! * [`pulse`]: control-pulse envelopes, photon waveforms, adiabatic emission
//!   theory and inverse pulse design.
//! * [`trajectories`]: quantum-jump Monte Carlo, click streams and g²(τ).
//! * [`cavity`]: efficiency algebra, reflection spectra and their fitting,
//!   and a one-dimensional quasipotential cavity model.
//! * [`stats`]: photon-stream, loss-budget, nuclear-spin and thermal
//!   statistics.
//!
//! All user-facing rates are ordinary frequencies in GHz and all times are in
//! nanoseconds. Conversion to angular units happens once, when Hamiltonians
//! and collapse operators are built.

pub mod cavity;
pub mod dynamics;
pub mod error;
pub mod lsq;
pub mod ode;
pub mod pulse;
pub mod stats;
pub mod trajectories;

pub use error::{Error, Result};

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;
