use serde::{Deserialize, Serialize};

use super::{PhotonWaveform, PulseEnvelope};
use crate::dynamics::{
    evolve, photon_flux, photon_system, BasisLabel, CqedParams, DensityMatrix, TimeGrid,
    Trajectory, TWO_PI,
};
use crate::{Error, Result};

/// Rabi frequency of a drive whose Hamiltonian matrix element is `2π·Ω`;
/// population oscillates as `sin²(2π·Ω_R·t/2)` with `Ω_R = 2|Ω|`.
pub fn rabi_frequency(envelope_amplitude: f64) -> f64 {
    2.0 * envelope_amplitude.abs()
}

/// Envelope amplitude producing Rabi frequency `omega_rabi`.
pub fn envelope_amplitude(omega_rabi: f64) -> f64 {
    0.5 * omega_rabi
}

/// Adiabatic fluorescence rate `Γ_fl = Ω_R²/Γ` (GHz) with the
/// cavity-enhanced linewidth `Γ = (C+1)γ`.
pub fn adiabatic_emission_rate(omega_rabi: f64, params: &CqedParams) -> Result<f64> {
    if !(omega_rabi >= 0.0) || !omega_rabi.is_finite() {
        return Err(Error::invalid("omega", "must be finite and ≥ 0"));
    }
    let gamma = params.purcell_linewidth();
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::invalid("gamma", "linewidth (C+1)γ must be positive"));
    }
    Ok(omega_rabi * omega_rabi / gamma)
}

/// A photon simulation together with its underlying state trajectory.
#[derive(Debug, Clone)]
pub struct PhotonSimulation {
    pub waveform: PhotonWaveform,
    pub trajectory: Trajectory,
}

/// Runs the four-level model from `|↑,0⟩` and returns the full trajectory.
pub fn simulate_photon_states(
    params: &CqedParams,
    pulse: &PulseEnvelope,
    grid: &TimeGrid,
) -> Result<PhotonSimulation> {
    let sys = photon_system(params, pulse, None)?;
    let rho0 = DensityMatrix::pure(BasisLabel::Up0, 4)?;
    let trajectory = evolve(&sys, &rho0, grid)?;
    let times = trajectory.iter().map(|(t, _)| *t).collect();
    let flux = trajectory
        .iter()
        .map(|(_, r)| photon_flux(r, params))
        .collect();
    Ok(PhotonSimulation {
        waveform: PhotonWaveform::new(times, flux)?,
        trajectory,
    })
}

/// Emitted photon flux for a control pulse, starting from `|↑,0⟩`.
pub fn simulate_photon(
    params: &CqedParams,
    pulse: &PulseEnvelope,
    grid: &TimeGrid,
) -> Result<PhotonWaveform> {
    Ok(simulate_photon_states(params, pulse, grid)?.waveform)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticReport {
    /// Largest population of `|↓′,0⟩` during the pulse.
    pub max_excited_population: f64,
    /// `max Ω_R(t) / Γ`.
    pub ratio_max: f64,
    pub adiabatic: bool,
}

pub const DEFAULT_ADIABATIC_THRESHOLD: f64 = 0.1;

/// Simulates the pulse and reports how far it is from the adiabatic regime.
pub fn verify_adiabaticity(
    params: &CqedParams,
    pulse: &PulseEnvelope,
    threshold: f64,
) -> Result<AdiabaticReport> {
    let gamma = params.purcell_linewidth();
    let ratio_max = if gamma > 0.0 {
        rabi_frequency(pulse.max_abs()) / gamma
    } else if pulse.is_zero() {
        0.0
    } else {
        f64::INFINITY
    };
    let Some((t0, t1)) = pulse.support().filter(|_| !pulse.is_zero()) else {
        return Ok(AdiabaticReport {
            max_excited_population: 0.0,
            ratio_max,
            adiabatic: ratio_max < threshold,
        });
    };
    // Follow the decay of the excited state for a few lifetimes.
    let tail = if gamma > 0.0 { 5.0 / (TWO_PI * gamma) } else { 1.0 };
    let span = t1 + tail - t0;
    let samples = ((span / 0.05).ceil() as usize).clamp(200, 200_000);
    let grid = TimeGrid::new(t0, t1 + tail, samples)?;
    let sim = simulate_photon_states(params, pulse, &grid)?;
    let max_excited_population = sim
        .trajectory
        .iter()
        .map(|(_, r)| r.population(BasisLabel::DownPrime0))
        .fold(0.0, f64::max);
    Ok(AdiabaticReport {
        max_excited_population,
        ratio_max,
        adiabatic: ratio_max < threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emission_rate_identities() {
        let p = CqedParams::reference();
        let g = p.purcell_linewidth();
        assert_eq!(adiabatic_emission_rate(0.0, &p).unwrap(), 0.0);
        assert!((adiabatic_emission_rate(g, &p).unwrap() - g).abs() < 1e-12);
        let r = adiabatic_emission_rate(0.194, &p).unwrap();
        assert!((r - 0.194f64.powi(2) / 0.6638).abs() < 1e-4);
        assert!((r - 0.0567).abs() < 5e-4);
        let mut z = p;
        z.gamma = 0.0;
        assert!(adiabatic_emission_rate(0.1, &z).is_err());
    }

    #[test]
    fn zero_pulse_report() {
        let rep =
            verify_adiabaticity(&CqedParams::reference(), &PulseEnvelope::zero(), 0.1).unwrap();
        assert_eq!(rep.max_excited_population, 0.0);
        assert!(rep.adiabatic);
    }
}
