//! Cavity-QED efficiency algebra, reflection spectra and their fitting,
//! coupling classification, and a one-dimensional quasipotential model of
//! the asymmetric photonic-crystal cavity.

mod classify;
mod efficiency;
mod fit;
pub mod quasipotential;
mod reflection;

pub use classify::{classify_coupling, CouplingClass, CouplingEvidence};
pub use efficiency::{
    cooperativity, optimal_waveguide_rate, source_efficiency, CavityCouplings, SourceEfficiency,
};
pub use fit::{fit_cqed_params, CqedFitResult, FitOptions, FitParams};
pub use reflection::{
    reflection_coefficient, reflection_spectrum, synthetic_spectrum, ReflectionSpectrum,
    SpectrumGrid,
};
pub use quasipotential::{
    design_fitness, effective_barrier_height, quasipotential_mode_solver, DesignScores,
    QuasipotentialModel, QuasipotentialProfile,
};
