//! Joint atom-cavity dynamics of the SiV photon source.
//!
//! The state space is the single-excitation joint basis of the SiV spin and
//! the cavity mode. The four-level photon-generation model uses
//! `|↑,0⟩, |↓′,0⟩, |↓,1⟩, |↓,0⟩`; the five-level model used for
//! correlation measurements appends `|↑′,0⟩`, which is reached from `|↓,0⟩`
//! by the re-initialization drive and decays back into `|↑,0⟩`.

mod density;
mod evolve;
mod hamiltonian;
mod params;

pub use density::DensityMatrix;
pub use evolve::{evolve, TimeGrid, Trajectory};
pub use hamiltonian::{
    build_collapse_operators, build_photon_hamiltonian, expectation, lindblad_derivative,
    photon_flux, photon_system, Channel, CollapseOp, DriveTerm, LindbladSystem,
};
pub use params::{BasisLabel, CqedParams, ModelKind, SpinRelaxation};

/// 2π, the single conversion factor between ordinary (GHz) and angular
/// (rad/ns) frequencies.
pub const TWO_PI: f64 = std::f64::consts::TAU;
