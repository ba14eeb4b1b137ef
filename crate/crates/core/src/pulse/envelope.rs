use serde::{Deserialize, Serialize};

use crate::error::ensure_positive;
use crate::{Error, Result, C64};

/// Samples per σ (Gaussians) and per edge (square pulses).
const SAMPLES_PER_WIDTH: usize = 40;
/// Gaussians are tabulated out to ±`GAUSS_SPAN` σ.
const GAUSS_SPAN: f64 = 6.0;

fn default_rise() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    /// Peak amplitude (GHz).
    pub amplitude: f64,
    /// Center (ns).
    pub mu: f64,
    /// Standard deviation (ns).
    pub sigma: f64,
}

impl GaussianSpec {
    pub fn new(amplitude: f64, mu: f64, sigma: f64) -> Self {
        Self {
            amplitude,
            mu,
            sigma,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        let z = (t - self.mu) / self.sigma;
        self.amplitude * (-0.5 * z * z).exp()
    }

    fn validate(&self) -> Result<()> {
        if !self.amplitude.is_finite() || !self.mu.is_finite() {
            return Err(Error::NonFinite("gaussian parameters"));
        }
        ensure_positive("sigma", self.sigma)
    }
}

/// Constructor descriptor for [`make_pulse`]. Also kept as metadata on the
/// resulting envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PulseShape {
    /// Flat-top pulse from `start` to `end` with linear edges of width `rise`.
    Square {
        amplitude: f64,
        start: f64,
        end: f64,
        #[serde(default = "default_rise")]
        rise: f64,
    },
    Gaussian(GaussianSpec),
    /// Pointwise sum of Gaussians.
    Composite { peaks: Vec<GaussianSpec> },
    Tabulated,
}

/// Time-sampled complex drive amplitude Ω(t) in GHz.
///
/// Values are linearly interpolated between samples and are zero outside
/// the sampled interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseEnvelope {
    times: Vec<f64>,
    values: Vec<C64>,
    shape: PulseShape,
}

impl PulseEnvelope {
    /// The identically-zero drive.
    pub fn zero() -> Self {
        Self {
            times: Vec::new(),
            values: Vec::new(),
            shape: PulseShape::Tabulated,
        }
    }

    pub fn tabulated(times: Vec<f64>, values: Vec<C64>) -> Result<Self> {
        Self::with_shape(times, values, PulseShape::Tabulated)
    }

    pub fn tabulated_real(times: Vec<f64>, values: &[f64]) -> Result<Self> {
        let values = values.iter().map(|&v| C64::new(v, 0.0)).collect();
        Self::tabulated(times, values)
    }

    fn with_shape(times: Vec<f64>, values: Vec<C64>, shape: PulseShape) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                found: values.len(),
            });
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("pulse sample time"));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite("pulse sample"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "pulse times",
                "sample times must be strictly increasing",
            ));
        }
        Ok(Self {
            times,
            values,
            shape,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn shape(&self) -> &PulseShape {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.norm_sqr() == 0.0)
    }

    /// First and last sample time.
    pub fn support(&self) -> Option<(f64, f64)> {
        Some((*self.times.first()?, *self.times.last()?))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn min_spacing(&self) -> Option<f64> {
        self.times
            .windows(2)
            .map(|w| w[1] - w[0])
            .min_by(|a, b| a.total_cmp(b))
    }

    pub fn eval(&self, t: f64) -> C64 {
        let n = self.times.len();
        if n == 0 || t < self.times[0] || t > self.times[n - 1] {
            return C64::new(0.0, 0.0);
        }
        let i = self.times.partition_point(|&x| x <= t);
        if i == n {
            return self.values[n - 1];
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let w = (t - t0) / (t1 - t0);
        self.values[i - 1] * (1.0 - w) + self.values[i] * w
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            times: self.times.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
            shape: match &self.shape {
                PulseShape::Square {
                    amplitude,
                    start,
                    end,
                    rise,
                } => PulseShape::Square {
                    amplitude: amplitude * factor,
                    start: *start,
                    end: *end,
                    rise: *rise,
                },
                PulseShape::Gaussian(g) => {
                    PulseShape::Gaussian(GaussianSpec::new(g.amplitude * factor, g.mu, g.sigma))
                }
                PulseShape::Composite { peaks } => PulseShape::Composite {
                    peaks: peaks
                        .iter()
                        .map(|g| GaussianSpec::new(g.amplitude * factor, g.mu, g.sigma))
                        .collect(),
                },
                PulseShape::Tabulated => PulseShape::Tabulated,
            },
        }
    }

    pub fn shifted(&self, dt: f64) -> Self {
        let shape = match &self.shape {
            PulseShape::Square {
                amplitude,
                start,
                end,
                rise,
            } => PulseShape::Square {
                amplitude: *amplitude,
                start: start + dt,
                end: end + dt,
                rise: *rise,
            },
            PulseShape::Gaussian(g) => {
                PulseShape::Gaussian(GaussianSpec::new(g.amplitude, g.mu + dt, g.sigma))
            }
            PulseShape::Composite { peaks } => PulseShape::Composite {
                peaks: peaks
                    .iter()
                    .map(|g| GaussianSpec::new(g.amplitude, g.mu + dt, g.sigma))
                    .collect(),
            },
            PulseShape::Tabulated => PulseShape::Tabulated,
        };
        Self {
            times: self.times.iter().map(|t| t + dt).collect(),
            values: self.values.clone(),
            shape,
        }
    }
}

fn gaussian_grid(g: &GaussianSpec) -> Vec<f64> {
    let dt = g.sigma / SAMPLES_PER_WIDTH as f64;
    let half = (GAUSS_SPAN * SAMPLES_PER_WIDTH as f64) as i64;
    (-half..=half).map(|k| g.mu + k as f64 * dt).collect()
}

/// Samples a pulse descriptor into an envelope.
pub fn make_pulse(shape: &PulseShape) -> Result<PulseEnvelope> {
    match shape {
        PulseShape::Square {
            amplitude,
            start,
            end,
            rise,
        } => {
            if !amplitude.is_finite() || !start.is_finite() || !end.is_finite() {
                return Err(Error::NonFinite("square pulse parameters"));
            }
            ensure_positive("rise", *rise)?;
            if end - start < 2.0 * rise {
                return Err(Error::invalid(
                    "square pulse",
                    format!("duration {} ns shorter than two edges of {rise} ns", end - start),
                ));
            }
            let n = SAMPLES_PER_WIDTH;
            let mut times = Vec::with_capacity(2 * n + 2);
            let mut values = Vec::with_capacity(2 * n + 2);
            for k in 0..=n {
                let w = k as f64 / n as f64;
                times.push(start + w * rise);
                values.push(C64::new(amplitude * w, 0.0));
            }
            for k in 0..=n {
                let w = k as f64 / n as f64;
                let t = end - rise + w * rise;
                if t > *times.last().unwrap() {
                    times.push(t);
                    values.push(C64::new(amplitude * (1.0 - w), 0.0));
                }
            }
            PulseEnvelope::with_shape(times, values, shape.clone())
        }
        PulseShape::Gaussian(g) => {
            g.validate()?;
            let times = gaussian_grid(g);
            let values = times.iter().map(|&t| C64::new(g.value(t), 0.0)).collect();
            PulseEnvelope::with_shape(times, values, shape.clone())
        }
        PulseShape::Composite { peaks } => {
            if peaks.is_empty() {
                return Err(Error::EmptyInput("composite pulse"));
            }
            for g in peaks {
                g.validate()?;
            }
            let mut times: Vec<f64> = peaks.iter().flat_map(gaussian_grid).collect();
            times.sort_by(|a, b| a.total_cmp(b));
            let min_dt = peaks
                .iter()
                .map(|g| g.sigma / SAMPLES_PER_WIDTH as f64)
                .fold(f64::INFINITY, f64::min);
            times.dedup_by(|b, a| *b - *a < 1e-3 * min_dt);
            let values = times
                .iter()
                .map(|&t| C64::new(peaks.iter().map(|g| g.value(t)).sum(), 0.0))
                .collect();
            PulseEnvelope::with_shape(times, values, shape.clone())
        }
        PulseShape::Tabulated => Err(Error::invalid(
            "pulse shape",
            "tabulated envelopes are built from samples, not a descriptor",
        )),
    }
}
