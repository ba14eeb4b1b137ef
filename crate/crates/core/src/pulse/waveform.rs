use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Emitted photon flux (1/ns) sampled in time (ns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonWaveform {
    times: Vec<f64>,
    flux: Vec<f64>,
    total_probability: f64,
}

fn trapezoid(times: &[f64], ys: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(ys.windows(2))
        .map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1]))
        .sum()
}

impl PhotonWaveform {
    /// Round-off negatives down to −1e-12 are clipped to zero.
    pub fn new(times: Vec<f64>, mut flux: Vec<f64>) -> Result<Self> {
        if times.len() != flux.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                found: flux.len(),
            });
        }
        if times.len() < 2 {
            return Err(Error::EmptyInput("waveform needs at least two samples"));
        }
        if times.iter().chain(&flux).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("waveform"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("waveform times", "must be strictly increasing"));
        }
        for f in flux.iter_mut() {
            if *f < -1e-12 {
                return Err(Error::invalid("flux", format!("negative sample {f}")));
            }
            *f = f.max(0.0);
        }
        let total_probability = trapezoid(&times, &flux);
        Ok(Self {
            times,
            flux,
            total_probability,
        })
    }

    pub fn zero(times: Vec<f64>) -> Result<Self> {
        let n = times.len();
        Self::new(times, vec![0.0; n])
    }

    /// Samples `f` on `[t_start, t_end]` with `samples` points.
    pub fn from_fn(t_start: f64, t_end: f64, samples: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if samples < 2 || !(t_end > t_start) {
            return Err(Error::invalid("waveform grid", "need t_end > t_start and ≥ 2 samples"));
        }
        let dt = (t_end - t_start) / (samples - 1) as f64;
        let times: Vec<f64> = (0..samples).map(|k| t_start + k as f64 * dt).collect();
        let flux = times.iter().map(|&t| f(t)).collect();
        Self::new(times, flux)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn flux(&self) -> &[f64] {
        &self.flux
    }

    pub fn total_probability(&self) -> f64 {
        self.total_probability
    }

    pub fn is_zero(&self) -> bool {
        self.flux.iter().all(|&f| f == 0.0)
    }

    /// Time and value of the maximum.
    pub fn peak(&self) -> (f64, f64) {
        let mut best = (self.times[0], self.flux[0]);
        for (&t, &f) in self.times.iter().zip(&self.flux) {
            if f > best.1 {
                best = (t, f);
            }
        }
        best
    }

    /// Linear interpolation, zero outside the sampled interval.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t < self.times[0] || t > self.times[n - 1] {
            return 0.0;
        }
        let i = self.times.partition_point(|&x| x <= t);
        if i == n {
            return self.flux[n - 1];
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let w = (t - t0) / (t1 - t0);
        self.flux[i - 1] * (1.0 - w) + self.flux[i] * w
    }

    /// Full width at half maximum between the outermost half-maximum
    /// crossings; `None` for a zero waveform or one that does not fall below
    /// half maximum on both sides.
    pub fn fwhm(&self) -> Option<f64> {
        let (_, peak) = self.peak();
        if peak <= 0.0 {
            return None;
        }
        let half = 0.5 * peak;
        let first = self.flux.iter().position(|&f| f >= half)?;
        let last = self.flux.iter().rposition(|&f| f >= half)?;
        if first == 0 || last + 1 == self.flux.len() {
            return None;
        }
        let cross = |i: usize, j: usize| {
            let (fa, fb) = (self.flux[i], self.flux[j]);
            let (ta, tb) = (self.times[i], self.times[j]);
            ta + (half - fa) / (fb - fa) * (tb - ta)
        };
        Some(cross(last, last + 1) - cross(first - 1, first))
    }

    /// Same shape with integral `total`.
    pub fn rescaled(&self, total: f64) -> Result<Self> {
        if self.total_probability <= 0.0 {
            return Err(Error::invalid("waveform", "cannot rescale a zero waveform"));
        }
        let s = total / self.total_probability;
        Self::new(self.times.clone(), self.flux.iter().map(|f| f * s).collect())
    }

    /// RMS of `other − self` on this waveform's samples, divided by this
    /// waveform's peak.
    pub fn relative_rms_error(&self, other: &PhotonWaveform) -> f64 {
        let peak = self.peak().1;
        let n = self.times.len() as f64;
        let ss: f64 = self
            .times
            .iter()
            .zip(&self.flux)
            .map(|(&t, &f)| (other.eval(t) - f).powi(2))
            .sum();
        let rms = (ss / n).sqrt();
        if peak > 0.0 {
            rms / peak
        } else {
            rms
        }
    }

    /// Number of local maxima above `fraction` of the global peak that are
    /// separated by a dip below `dip` of the smaller neighbouring peak.
    pub fn count_peaks(&self, fraction: f64, dip: f64) -> usize {
        let peak = self.peak().1;
        if peak <= 0.0 {
            return 0;
        }
        let mut count = 0;
        let mut last_peak: Option<f64> = None;
        let mut min_since = f64::INFINITY;
        for i in 1..self.flux.len().saturating_sub(1) {
            let f = self.flux[i];
            min_since = min_since.min(f);
            if f >= self.flux[i - 1] && f > self.flux[i + 1] && f >= fraction * peak {
                let resolved = match last_peak {
                    None => true,
                    Some(p) => min_since < dip * p.min(f),
                };
                if resolved {
                    count += 1;
                    last_peak = Some(f);
                    min_since = f;
                } else if f > last_peak.unwrap_or(0.0) {
                    last_peak = Some(f);
                }
            }
        }
        count
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_fwhm_and_area() {
        let s = 5.0;
        let w = PhotonWaveform::from_fn(0.0, 100.0, 2001, |t| {
            (-(t - 50.0f64).powi(2) / (2.0 * s * s)).exp()
        })
        .unwrap();
        let expected = 2.0 * (2.0 * 2f64.ln()).sqrt() * s;
        assert!((w.fwhm().unwrap() - expected).abs() < 1e-3);
        assert!((w.total_probability() - s * (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-6);
        assert_eq!(w.count_peaks(0.3, 0.5), 1);
    }

    #[test]
    fn rescale_and_error() {
        let w = PhotonWaveform::from_fn(0.0, 10.0, 101, |t| t * (10.0 - t)).unwrap();
        let r = w.rescaled(0.5).unwrap();
        assert!((r.total_probability() - 0.5).abs() < 1e-12);
        assert!(r.relative_rms_error(&r) < 1e-15);
        assert!(PhotonWaveform::zero(vec![0.0, 1.0]).unwrap().rescaled(1.0).is_err());
    }

    #[test]
    fn rejects_negative_flux() {
        assert!(PhotonWaveform::new(vec![0.0, 1.0], vec![0.0, -1.0]).is_err());
    }
}
