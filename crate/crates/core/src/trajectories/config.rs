use serde::{Deserialize, Serialize};

use crate::pulse::{make_pulse, GaussianSpec, PulseEnvelope, PulseShape};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseRole {
    /// Drives `|↑,0⟩ ↔ |↓′,0⟩` and generates a photon.
    Generate,
    /// Drives `|↓,0⟩ ↔ |↑′,0⟩` and returns the spin to `|↑⟩`.
    Reinitialize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequencePulse {
    /// Times relative to the start of a period.
    pub envelope: PulseEnvelope,
    pub role: PulseRole,
}

/// One period of pulses, repeated `repetitions` times per trajectory.
/// Drive samples outside `[0, period_ns)` are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryConfig {
    pub n_trajectories: usize,
    pub seed: u64,
    pub pulse_sequence: Vec<SequencePulse>,
    pub period_ns: f64,
    pub repetitions: usize,
    /// Jump-time resolution of the bisection (ns).
    pub resolution_ns: f64,
    /// Propagation step (ns).
    pub step_ns: f64,
}

impl TrajectoryConfig {
    /// Gaussian generation pulse at 50 ns followed by a re-initialization
    /// pulse at 120 ns, repeated every 150 ns.
    pub fn reference(n_trajectories: usize, seed: u64) -> Self {
        let generate = make_pulse(&PulseShape::Gaussian(GaussianSpec::new(0.194, 50.0, 15.0)))
            .expect("valid built-in pulse");
        let reinit = make_pulse(&PulseShape::Gaussian(GaussianSpec::new(0.5, 120.0, 8.0)))
            .expect("valid built-in pulse");
        Self {
            n_trajectories,
            seed,
            pulse_sequence: vec![
                SequencePulse {
                    envelope: generate,
                    role: PulseRole::Generate,
                },
                SequencePulse {
                    envelope: reinit,
                    role: PulseRole::Reinitialize,
                },
            ],
            period_ns: 150.0,
            repetitions: 11,
            resolution_ns: 0.01,
            step_ns: 0.05,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trajectories == 0 {
            return Err(Error::invalid("n_trajectories", "must be at least 1"));
        }
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions", "must be at least 1"));
        }
        for (name, v) in [
            ("resolution_ns", self.resolution_ns),
            ("step_ns", self.step_ns),
            ("period_ns", self.period_ns),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, "must be positive"));
            }
        }
        if self.step_ns > self.period_ns {
            return Err(Error::invalid("step_ns", "must not exceed the period"));
        }
        if self.generation_centers().is_empty() {
            return Err(Error::invalid(
                "pulse_sequence",
                "needs at least one generation pulse",
            ));
        }
        Ok(())
    }

    /// Intensity-weighted centers of the generation pulses, in order.
    pub fn generation_centers(&self) -> Vec<f64> {
        let mut c: Vec<f64> = self
            .pulse_sequence
            .iter()
            .filter(|p| p.role == PulseRole::Generate)
            .map(|p| envelope_center(&p.envelope))
            .collect();
        c.sort_by(|a, b| a.total_cmp(b));
        c
    }

    pub fn pulses_per_trajectory(&self) -> usize {
        self.repetitions * self.generation_centers().len()
    }

    /// Mean spacing between consecutive generation pulses.
    pub fn pulse_spacing_ns(&self) -> f64 {
        self.period_ns / self.generation_centers().len().max(1) as f64
    }
}

fn envelope_center(env: &PulseEnvelope) -> f64 {
    let t = env.times();
    let v = env.values();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 1..t.len() {
        let dt = t[i] - t[i - 1];
        let w = 0.5 * dt * (v[i].norm_sqr() + v[i - 1].norm_sqr());
        num += w * 0.5 * (t[i] + t[i - 1]);
        den += w;
    }
    if den > 0.0 {
        num / den
    } else {
        t.first().copied().unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_config_is_valid() {
        let c = TrajectoryConfig::reference(10, 1);
        c.validate().unwrap();
        let centers = c.generation_centers();
        assert_eq!(centers.len(), 1);
        assert!((centers[0] - 50.0).abs() < 1e-6);
        assert_eq!(c.pulses_per_trajectory(), 11);
    }

    #[test]
    fn rejects_bad_config() {
        let mut c = TrajectoryConfig::reference(10, 1);
        c.resolution_ns = 0.0;
        assert!(c.validate().is_err());
        let mut c = TrajectoryConfig::reference(0, 1);
        assert!(c.validate().is_err());
        c.n_trajectories = 1;
        c.pulse_sequence.retain(|p| p.role != PulseRole::Generate);
        assert!(c.validate().is_err());
    }
}
