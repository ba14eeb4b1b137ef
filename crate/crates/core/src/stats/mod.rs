//! Source-level statistics: photon streams, efficiency fits, the loss
//! budget, the nuclear-spin frequency correlations and 1 K estimates.

mod budget;
mod decay;
mod nuclear;
mod runs;
mod spectra;

pub use budget::{
    duty_cycle, wcs_gain, wcs_monte_carlo, DowntimeDecomposition, LossBudget, WcsGain,
    WcsMonteCarlo,
};
pub use decay::{fit_exponential_decay, synthetic_decay_curve, DecayFit, DecayModel, Weights};
pub use nuclear::{
    consecutive_label_ratio, expected_label_ratio, label_autocorrelation, leakage_for_ratio,
    markov_decay_constant, nuclear_correlations, simulate_nuclear_chain, NuclearChainConfig,
    NuclearCorrelations,
};
pub use runs::{
    count_streams, count_streams_modulated, expected_maximal_runs, fit_stream_efficiency,
    OuModulation, StreamStats,
};
pub use spectra::{
    hyperfine_scan, thermal_estimates, HyperfineScan, HyperfineSpectrum, ThermalEstimate,
    ThermalInputs,
};
