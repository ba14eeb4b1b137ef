use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperfineScan {
    pub splitting_mhz: f64,
    pub filter_fwhm_mhz: f64,
    /// Spectral FWHM of the photons themselves.
    pub photon_linewidth_mhz: f64,
    pub scan_half_width_mhz: f64,
    pub points: usize,
    /// Relative weights of the two nuclear states.
    pub populations: (f64, f64),
}

impl Default for HyperfineScan {
    fn default() -> Self {
        Self {
            splitting_mhz: 52.0,
            filter_fwhm_mhz: 5.0,
            // a ~1 µs exponential photon
            photon_linewidth_mhz: 1.0 / (2.0 * std::f64::consts::PI),
            scan_half_width_mhz: 100.0,
            points: 2001,
            populations: (0.5, 0.5),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperfineSpectrum {
    /// `(pump detuning in MHz, detected rate)`; the rate is 1 at the centre
    /// of an isolated peak of unit weight.
    pub points: Vec<(f64, f64)>,
    /// Peak FWHM, photon linewidth plus filter linewidth.
    pub fwhm_mhz: f64,
    /// Local maxima, refined by parabolic interpolation.
    pub peaks_mhz: Vec<f64>,
}

impl HyperfineSpectrum {
    pub fn peak_separation(&self) -> Option<f64> {
        match self.peaks_mhz.as_slice() {
            [a, .., b] => Some(b - a),
            _ => None,
        }
    }
}

/// Filtered photon rate as the pump is swept: two Lorentzians at
/// `±splitting/2`, weighted by the nuclear populations. Convolving the
/// Lorentzian photon line with the Lorentzian filter adds the widths.
pub fn hyperfine_scan(scan: &HyperfineScan) -> Result<HyperfineSpectrum> {
    crate::error::ensure_positive("filter_fwhm_mhz", scan.filter_fwhm_mhz)?;
    crate::error::ensure_nonnegative("photon_linewidth_mhz", scan.photon_linewidth_mhz)?;
    crate::error::ensure_nonnegative("splitting_mhz", scan.splitting_mhz)?;
    crate::error::ensure_positive("scan_half_width_mhz", scan.scan_half_width_mhz)?;
    crate::error::ensure_nonnegative("populations.0", scan.populations.0)?;
    crate::error::ensure_nonnegative("populations.1", scan.populations.1)?;
    if scan.points < 3 {
        return Err(Error::invalid("points", "need at least 3"));
    }
    let w = scan.photon_linewidth_mhz + scan.filter_fwhm_mhz;
    let lor = |x: f64| 1.0 / (1.0 + (2.0 * x / w).powi(2));
    let half = 0.5 * scan.splitting_mhz;
    let rate = |d: f64| scan.populations.0 * lor(d + half) + scan.populations.1 * lor(d - half);
    let n = scan.points;
    let h = 2.0 * scan.scan_half_width_mhz / (n - 1) as f64;
    let points: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let d = -scan.scan_half_width_mhz + h * k as f64;
            (d, rate(d))
        })
        .collect();
    let max = points.iter().map(|p| p.1).fold(0.0, f64::max);
    let mut peaks_mhz = Vec::new();
    for k in 1..n - 1 {
        let (y0, y1, y2) = (points[k - 1].1, points[k].1, points[k + 1].1);
        if y1 > y0 && y1 >= y2 && y1 > 0.1 * max {
            let den = y0 - 2.0 * y1 + y2;
            let shift = if den != 0.0 { 0.5 * (y0 - y2) / den } else { 0.0 };
            peaks_mhz.push(points[k].0 + shift * h);
        }
    }
    Ok(HyperfineSpectrum {
        points,
        fwhm_mhz: w,
        peaks_mhz,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalInputs {
    pub temperature_k: f64,
    pub delta_gs_ghz: f64,
    pub t2_star_ns: f64,
    pub t1_ns: f64,
    /// Intensity FWHM of the Gaussian photon.
    pub photon_fwhm_ns: f64,
}

impl ThermalInputs {
    /// Operation at 1 K.
    pub fn one_kelvin() -> Self {
        Self {
            temperature_k: 1.0,
            delta_gs_ghz: 46.0,
            t2_star_ns: 400.0,
            t1_ns: 1200.0,
            photon_fwhm_ns: 20.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalEstimate {
    pub inputs: ThermalInputs,
    /// Steady-state population of the upper ground-state branch.
    pub upper_branch_population: f64,
    /// Fractional increase of the photon linewidth from dephasing.
    pub linewidth_increase: f64,
    /// Population lost to spin relaxation during one photon, `FWHM/T1`.
    pub population_decay_loss: f64,
}

const H_OVER_KB: f64 = 4.799_243_073e-11; // K·s

/// FWHM of a Gaussian of width `fg` convolved with a Lorentzian of width
/// `fl` (Olivero-Longbothum, 0.02% accurate).
fn voigt_fwhm(fg: f64, fl: f64) -> f64 {
    0.5346 * fl + (0.2166 * fl * fl + fg * fg).sqrt()
}

pub fn thermal_estimates(inputs: &ThermalInputs) -> Result<ThermalEstimate> {
    crate::error::ensure_positive("temperature_k", inputs.temperature_k)?;
    crate::error::ensure_nonnegative("delta_gs_ghz", inputs.delta_gs_ghz)?;
    crate::error::ensure_positive("t2_star_ns", inputs.t2_star_ns)?;
    crate::error::ensure_positive("t1_ns", inputs.t1_ns)?;
    crate::error::ensure_positive("photon_fwhm_ns", inputs.photon_fwhm_ns)?;
    let x = (-H_OVER_KB * inputs.delta_gs_ghz * 1e9 / inputs.temperature_k).exp();
    // transform-limited Gaussian: Δν·Δt = 2 ln2/π
    let fg = 2.0 * std::f64::consts::LN_2 / (std::f64::consts::PI * inputs.photon_fwhm_ns);
    let fl = 1.0 / (std::f64::consts::PI * inputs.t2_star_ns);
    Ok(ThermalEstimate {
        inputs: *inputs,
        upper_branch_population: x / (1.0 + x),
        linewidth_increase: voigt_fwhm(fg, fl) / fg - 1.0,
        population_decay_loss: (inputs.photon_fwhm_ns / inputs.t1_ns).min(1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_kelvin_numbers() {
        let t = thermal_estimates(&ThermalInputs::one_kelvin()).unwrap();
        assert!((t.upper_branch_population - 0.0991).abs() < 1e-3);
        assert!((t.population_decay_loss - 0.01667).abs() < 1e-4);
        assert!(t.linewidth_increase > 0.01 && t.linewidth_increase < 0.03);
        let cold = ThermalInputs {
            temperature_k: 0.01,
            ..ThermalInputs::one_kelvin()
        };
        assert!(thermal_estimates(&cold).unwrap().upper_branch_population < 1e-90);
        let bad = ThermalInputs {
            temperature_k: 0.0,
            ..ThermalInputs::one_kelvin()
        };
        assert!(thermal_estimates(&bad).is_err());
    }

    #[test]
    fn voigt_limits() {
        assert!((voigt_fwhm(1.0, 0.0) - 1.0).abs() < 1e-12);
        assert!((voigt_fwhm(0.0, 1.0) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn hyperfine_peaks() {
        let s = hyperfine_scan(&HyperfineScan::default()).unwrap();
        assert_eq!(s.peaks_mhz.len(), 2);
        assert!((s.peak_separation().unwrap() - 52.0).abs() < 0.5);
        let one = hyperfine_scan(&HyperfineScan {
            splitting_mhz: 0.0,
            ..HyperfineScan::default()
        })
        .unwrap();
        assert_eq!(one.peaks_mhz.len(), 1);
    }
}
