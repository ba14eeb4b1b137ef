use serde::{Deserialize, Serialize};

use super::PhotonWaveform;
use crate::{Error, Result};

/// Built-in photon shapes for pulse inversion. Shapes are relative; the
/// amplitude is set by the requested total probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TargetFamily {
    /// `(1 − e^{−s/rise})² e^{−s/tau}` for `s = t − start ≥ 0`.
    Exponential { start: f64, rise: f64, tau: f64 },
    Gaussian { center: f64, fwhm: f64 },
    /// Equal Gaussian peaks of width `sigma`, `spacing` apart.
    MultiPeak {
        peaks: usize,
        first: f64,
        spacing: f64,
        sigma: f64,
    },
}

impl TargetFamily {
    pub fn exponential() -> Self {
        TargetFamily::Exponential {
            start: 10.0,
            rise: 4.0,
            tau: 30.0,
        }
    }

    pub fn gaussian() -> Self {
        TargetFamily::Gaussian {
            center: 60.0,
            fwhm: 20.0,
        }
    }

    pub fn ten_peak() -> Self {
        TargetFamily::MultiPeak {
            peaks: 10,
            first: 20.0,
            spacing: 12.0,
            sigma: 2.5,
        }
    }

    pub fn shape(&self, t: f64) -> f64 {
        match *self {
            TargetFamily::Exponential { start, rise, tau } => {
                let s = t - start;
                if s <= 0.0 {
                    0.0
                } else {
                    (1.0 - (-s / rise).exp()).powi(2) * (-s / tau).exp()
                }
            }
            TargetFamily::Gaussian { center, fwhm } => {
                let sigma = fwhm / (8.0 * 2f64.ln()).sqrt();
                (-0.5 * ((t - center) / sigma).powi(2)).exp()
            }
            TargetFamily::MultiPeak {
                peaks,
                first,
                spacing,
                sigma,
            } => (0..peaks)
                .map(|k| (-0.5 * ((t - first - k as f64 * spacing) / sigma).powi(2)).exp())
                .sum(),
        }
    }

    /// Time window holding all but a negligible tail of the shape.
    pub fn window(&self) -> (f64, f64) {
        match *self {
            TargetFamily::Exponential { start, rise, tau } => {
                ((start - 10.0).min(0.0), start + 4.0 * rise + 8.0 * tau)
            }
            TargetFamily::Gaussian { center, fwhm } => {
                ((center - 3.0 * fwhm).min(0.0), center + 3.0 * fwhm)
            }
            TargetFamily::MultiPeak {
                peaks,
                first,
                spacing,
                sigma,
            } => (
                (first - 6.0 * sigma).min(0.0),
                first + (peaks.max(1) - 1) as f64 * spacing + 6.0 * sigma,
            ),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            TargetFamily::Exponential { rise, tau, .. } => rise > 0.0 && tau > 0.0,
            TargetFamily::Gaussian { fwhm, .. } => fwhm > 0.0,
            TargetFamily::MultiPeak {
                peaks,
                spacing,
                sigma,
                ..
            } => peaks >= 1 && spacing > 0.0 && sigma > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("target family", format!("{self:?}")))
        }
    }

    /// Sampled waveform with integral `total`, sample spacing `dt`.
    pub fn waveform(&self, total: f64, dt: f64) -> Result<PhotonWaveform> {
        self.validate()?;
        let (t0, t1) = self.window();
        let samples = ((t1 - t0) / dt).round() as usize + 1;
        PhotonWaveform::from_fn(t0, t1, samples, |t| self.shape(t))?.rescaled(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families_have_requested_area() {
        for fam in [
            TargetFamily::exponential(),
            TargetFamily::gaussian(),
            TargetFamily::ten_peak(),
        ] {
            let w = fam.waveform(0.5, 0.1).unwrap();
            assert!((w.total_probability() - 0.5).abs() < 1e-12);
        }
        let w = TargetFamily::gaussian().waveform(1.0, 0.05).unwrap();
        assert!((w.fwhm().unwrap() - 20.0).abs() < 0.01);
        let w = TargetFamily::ten_peak().waveform(1.0, 0.1).unwrap();
        assert_eq!(w.count_peaks(0.2, 0.5), 10);
    }
}
