use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dynamics::CqedParams;
use crate::pulse::io::{read_columns, write_columns};
use crate::{Error, Result, C64};

/// Intensity reflection of the cavity-emitter system,
/// `|1 − 2κ_w / (2i(ω−ω_c) + κ_tot + 4g²/(2i(ω−ω_a) + γ))|²`.
///
/// Every term is a rate or detuning in the same ordinary-frequency unit, so
/// the 2π factors cancel.
pub fn reflection_coefficient(
    omega: f64,
    g: f64,
    kappa_tot: f64,
    kappa_w: f64,
    gamma: f64,
    omega_c: f64,
    omega_a: f64,
) -> f64 {
    let atom = if g == 0.0 {
        C64::new(0.0, 0.0)
    } else {
        C64::new(4.0 * g * g, 0.0) / C64::new(gamma, 2.0 * (omega - omega_a))
    };
    let denom = C64::new(kappa_tot, 2.0 * (omega - omega_c)) + atom;
    let r = C64::new(1.0, 0.0) - C64::new(2.0 * kappa_w, 0.0) / denom;
    r.norm_sqr()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectionSpectrum {
    /// `(ω in GHz, R)`, ω strictly increasing.
    pub points: Vec<(f64, f64)>,
}

impl ReflectionSpectrum {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("reflection spectrum"));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::invalid("spectrum", "frequencies must be strictly increasing"));
        }
        for &(w, r) in &points {
            if !w.is_finite() || !r.is_finite() {
                return Err(Error::NonFinite("spectrum"));
            }
            if !(-1e-9..=1.0 + 1e-9).contains(&r) {
                return Err(Error::invalid("spectrum", format!("reflectance {r} at {w} GHz")));
            }
        }
        Ok(Self { points })
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn min(&self) -> (f64, f64) {
        self.points
            .iter()
            .copied()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty spectrum")
    }

    pub fn write_text<W: std::io::Write>(&self, w: W) -> Result<()> {
        let rows: Vec<Vec<f64>> = self.points.iter().map(|&(a, b)| vec![a, b]).collect();
        write_columns(w, &["omega_GHz", "R"], &rows)
    }

    pub fn read_text<R: std::io::BufRead>(r: R) -> Result<Self> {
        let (header, rows) = read_columns(r)?;
        if header.len() != 2 {
            return Err(Error::Parse("spectrum file needs 2 columns".into()));
        }
        Self::new(rows.iter().map(|r| (r[0], r[1])).collect())
    }
}

/// Evaluates the reflection model on the given frequencies.
pub fn reflection_spectrum(
    params: &CqedParams,
    omega_c: f64,
    omega_a: f64,
    omegas: &[f64],
) -> Result<ReflectionSpectrum> {
    params.validate()?;
    let points = omegas
        .iter()
        .map(|&w| {
            (
                w,
                reflection_coefficient(
                    w,
                    params.g,
                    params.kappa_tot(),
                    params.kappa_w,
                    params.gamma,
                    omega_c,
                    omega_a,
                ),
            )
        })
        .collect();
    ReflectionSpectrum::new(points)
}

/// A broad scan across the cavity plus a dense scan around the emitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumGrid {
    pub broad_half_width: f64,
    pub broad_points: usize,
    pub fine_half_width: f64,
    pub fine_points: usize,
}

impl Default for SpectrumGrid {
    fn default() -> Self {
        Self {
            broad_half_width: 600.0,
            broad_points: 601,
            fine_half_width: 3.0,
            fine_points: 301,
        }
    }
}

impl SpectrumGrid {
    pub fn frequencies(&self, omega_c: f64, omega_a: f64) -> Vec<f64> {
        let lin = |c: f64, hw: f64, n: usize| -> Vec<f64> {
            (0..n)
                .map(|k| c - hw + 2.0 * hw * k as f64 / (n.max(2) - 1) as f64)
                .collect()
        };
        let mut w = lin(omega_c, self.broad_half_width, self.broad_points);
        w.extend(lin(omega_a, self.fine_half_width, self.fine_points));
        w.sort_by(|a, b| a.total_cmp(b));
        w.dedup_by(|b, a| (*b - *a).abs() < 1e-9);
        w
    }
}

/// Model spectrum with multiplicative Gaussian noise of relative size
/// `noise`, clipped to `[0, 1]`.
pub fn synthetic_spectrum(
    params: &CqedParams,
    omega_c: f64,
    omega_a: f64,
    grid: &SpectrumGrid,
    noise: f64,
    seed: u64,
) -> Result<ReflectionSpectrum> {
    let clean = reflection_spectrum(params, omega_c, omega_a, &grid.frequencies(omega_c, omega_a))?;
    if noise == 0.0 {
        return Ok(clean);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = clean
        .points
        .iter()
        .map(|&(w, r)| {
            let z: f64 = StandardNormal.sample(&mut rng);
            (w, (r * (1.0 + noise * z)).clamp(0.0, 1.0))
        })
        .collect();
    ReflectionSpectrum::new(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_coupling_has_full_contrast() {
        let r = reflection_coefficient(0.0, 0.0, 200.0, 100.0, 0.1, 0.0, 5.0);
        assert!(r < 1e-30);
    }

    #[test]
    fn bare_overcoupled_resonance() {
        let r = reflection_coefficient(3.0, 0.0, 329.0, 240.0, 0.1, 3.0, 0.0);
        let field = 1.0 - 2.0 * 240.0 / 329.0;
        assert!((r - field * field).abs() < 1e-14);
    }

    #[test]
    fn reflectance_is_bounded() {
        let p = CqedParams::reference();
        let s = synthetic_spectrum(&p, 0.0, 19.88, &SpectrumGrid::default(), 0.0, 0).unwrap();
        assert!(s.points.iter().all(|&(_, r)| (0.0..=1.0 + 1e-9).contains(&r)));
    }
}
