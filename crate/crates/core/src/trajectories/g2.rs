use serde::{Deserialize, Serialize};

use super::config::TrajectoryConfig;
use super::engine::run_trajectories;
use super::stream::ClickStream;
use crate::dynamics::CqedParams;
use crate::{Error, Result};

/// Number of side peaks on each side used for normalization.
const SIDE_PEAKS: usize = 5;

/// Coincidences between emission records of the same trajectory, binned in
/// delay `τ = t_j − t_i` (both orders).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationHistogram {
    pub bin_width: f64,
    /// `(τ center, coincidences)`, symmetric about zero.
    pub bins: Vec<(f64, f64)>,
    pub pulse_spacing_ns: f64,
    pub n_trajectories: usize,
    pub pulses_per_trajectory: usize,
    /// Mean side-peak area per pulse pair, full-spacing windows.
    pub normalization: f64,
    /// Central-peak area over the mean side-peak area, full-spacing window.
    pub g2_zero: f64,
}

impl CorrelationHistogram {
    /// Pulse pairs contributing at pulse lag `k`.
    fn pairs_at_lag(&self, k: i64) -> f64 {
        let r = self.pulses_per_trajectory as i64;
        if k.abs() >= r {
            0.0
        } else {
            (self.n_trajectories as i64 * (r - k.abs())) as f64
        }
    }

    fn window_area(&self, center: f64, window: f64) -> f64 {
        let half = 0.5 * window;
        self.bins
            .iter()
            .filter(|(t, _)| *t >= center - half && *t < center + half)
            .map(|(_, c)| c)
            .sum()
    }

    fn side_lags(&self) -> Vec<i64> {
        let max_tau = self.bins.last().map(|b| b.0).unwrap_or(0.0);
        let k_max = SIDE_PEAKS
            .min(self.pulses_per_trajectory.saturating_sub(1))
            .min((max_tau / self.pulse_spacing_ns).floor() as usize) as i64;
        (1..=k_max).flat_map(|k| [-k, k]).collect()
    }

    /// Side-peak areas per pulse pair, `(lag, area)`.
    pub fn side_peak_areas(&self, window: f64) -> Vec<(i64, f64)> {
        self.side_lags()
            .into_iter()
            .map(|k| {
                let a = self.window_area(k as f64 * self.pulse_spacing_ns, window);
                (k, a / self.pairs_at_lag(k))
            })
            .collect()
    }

    /// Coincidences divided by pulse-pair count and normalization, so that
    /// side peaks have unit mean area per pulse pair.
    pub fn normalized(&self) -> Vec<(f64, f64)> {
        self.bins
            .iter()
            .map(|&(t, c)| {
                let k = (t / self.pulse_spacing_ns).round() as i64;
                let pairs = self.pairs_at_lag(k);
                let v = if pairs > 0.0 && self.normalization > 0.0 {
                    c / pairs / self.normalization / self.bin_width
                } else {
                    0.0
                };
                (t, v)
            })
            .collect()
    }
}

/// Histogram of pairwise emission delays within each trajectory.
pub fn g2_histogram(clicks: &ClickStream, bin_width: f64, max_tau: f64) -> Result<CorrelationHistogram> {
    if !(bin_width > 0.0) || !(max_tau > 0.0) {
        return Err(Error::invalid("g2 binning", "bin width and max τ must be positive"));
    }
    if clicks.records.is_empty() {
        return Err(Error::EmptyInput("click stream"));
    }
    let m = (max_tau / bin_width).ceil() as i64;
    let mut counts = vec![0.0f64; (2 * m + 1) as usize];
    for traj in clicks.by_trajectory() {
        let em: Vec<f64> = traj
            .iter()
            .filter(|r| r.channel == super::ClickChannel::Emission)
            .map(|r| r.t_ns)
            .collect();
        for i in 0..em.len() {
            for j in (i + 1)..em.len() {
                let tau = em[j] - em[i];
                if tau > max_tau {
                    break;
                }
                let b = (tau / bin_width).round() as i64;
                if b <= m {
                    counts[(m + b) as usize] += 1.0;
                    counts[(m - b) as usize] += 1.0;
                }
            }
        }
    }
    let bins = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| ((i as i64 - m) as f64 * bin_width, c))
        .collect();
    let mut hist = CorrelationHistogram {
        bin_width,
        bins,
        pulse_spacing_ns: clicks.meta.pulse_spacing_ns,
        n_trajectories: clicks.meta.n_trajectories,
        pulses_per_trajectory: clicks.meta.pulses_per_trajectory,
        normalization: 0.0,
        g2_zero: f64::NAN,
    };
    let sides = hist.side_peak_areas(hist.pulse_spacing_ns);
    if !sides.is_empty() {
        hist.normalization = sides.iter().map(|s| s.1).sum::<f64>() / sides.len() as f64;
        hist.g2_zero = g2_zero(&hist, hist.pulse_spacing_ns).unwrap_or(f64::NAN);
    }
    Ok(hist)
}

/// `g²(0)` and its Poisson standard error.
pub fn g2_zero_with_error(histogram: &CorrelationHistogram, window: f64) -> Result<(f64, f64)> {
    if !(window > 0.0) || window > histogram.pulse_spacing_ns * (1.0 + 1e-12) {
        return Err(Error::invalid("window", "must be positive and at most the pulse spacing"));
    }
    let lags = histogram.side_lags();
    if lags.is_empty() {
        return Err(Error::NoSidePeaks);
    }
    let mut side_raw = 0.0;
    let mut side_norm = 0.0;
    for &k in &lags {
        let a = histogram.window_area(k as f64 * histogram.pulse_spacing_ns, window);
        side_raw += a;
        side_norm += a / histogram.pairs_at_lag(k);
    }
    side_norm /= lags.len() as f64;
    if side_norm <= 0.0 {
        return Err(Error::NoSidePeaks);
    }
    let center = histogram.window_area(0.0, window);
    let g2 = center / histogram.pairs_at_lag(0) / side_norm;
    // Both delay orders are binned, so each coincidence is counted twice.
    let n_center = 0.5 * center;
    let n_side = 0.5 * side_raw;
    let rel = if n_center > 0.0 {
        (1.0 / n_center + 1.0 / n_side).sqrt()
    } else {
        0.0
    };
    let sigma = if n_center > 0.0 {
        g2 * rel
    } else {
        // Upper 1σ scale when no coincidences were seen.
        1.0 / histogram.pairs_at_lag(0) / side_norm
    };
    Ok((g2, sigma))
}

/// Integrated central peak over the mean of the side peaks at `±1..±5`
/// pulse spacings, each in a window of width `window`.
pub fn g2_zero(histogram: &CorrelationHistogram, window: f64) -> Result<f64> {
    Ok(g2_zero_with_error(histogram, window)?.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub gamma_t: f64,
    pub g2_zero: f64,
    pub g2_sigma: f64,
    pub histogram: CorrelationHistogram,
}

/// `g²(0)` versus spin relaxation rate. All points share the seed, so the
/// curve uses common random numbers.
pub fn gamma_t_sweep(
    params: &CqedParams,
    values: &[f64],
    config: &TrajectoryConfig,
    bin_width: f64,
) -> Result<Vec<SweepPoint>> {
    if values.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("gamma_t values", "must be sorted ascending"));
    }
    let max_tau = (SIDE_PEAKS as f64 + 0.5) * config.pulse_spacing_ns();
    values
        .iter()
        .map(|&gamma_t| {
            let mut p = *params;
            p.gamma_t = gamma_t;
            let stream = run_trajectories(&p, config)?;
            let histogram = g2_histogram(&stream, bin_width, max_tau)?;
            let (g2, sigma) = g2_zero_with_error(&histogram, config.pulse_spacing_ns())?;
            Ok(SweepPoint {
                gamma_t,
                g2_zero: g2,
                g2_sigma: sigma,
                histogram,
            })
        })
        .collect()
}
