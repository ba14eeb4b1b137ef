//! Control-pulse envelopes, photon wavepackets, adiabatic emission theory
//! and pulse inversion.
//!
//! Envelope values are the drive amplitude `Ω(t)` entering the Hamiltonian
//! as `2π·Ω`. The adiabatic formulas are written in terms of the Rabi
//! frequency `Ω_R = 2|Ω|` (see [`rabi_frequency`]).

mod adiabatic;
mod envelope;
mod forward;
mod inverse;
pub mod io;
mod spline;
mod targets;
mod waveform;

pub use adiabatic::{
    adiabatic_emission_rate, envelope_amplitude, rabi_frequency, simulate_photon,
    simulate_photon_states, verify_adiabaticity, AdiabaticReport, PhotonSimulation,
    DEFAULT_ADIABATIC_THRESHOLD,
};
pub use envelope::{make_pulse, GaussianSpec, PulseEnvelope, PulseShape};
pub use inverse::{invert_target_shape, InversionOptions, InversionResult, Normalization};
pub use spline::{cubic_bspline, UniformSpline};
pub use targets::TargetFamily;
pub use waveform::PhotonWaveform;
