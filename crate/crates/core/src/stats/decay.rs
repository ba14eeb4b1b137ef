use nalgebra::{Matrix2, Vector2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecayModel {
    /// `y = A·exp(−x/τ)`; the fitted value is `τ`.
    Exponential,
    /// `y = A·η^x`; the fitted value is `η`.
    Geometric,
}

#[derive(Debug, Clone, Copy)]
pub enum Weights<'a> {
    /// `y` are counts with variance `y`.
    Poisson,
    /// Unknown noise; the uncertainty is scaled by the residual variance.
    Uniform,
    /// One-sigma errors of `y`.
    Sigma(&'a [f64]),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub model: DecayModel,
    /// `τ` or `η`; `τ` is infinite when the data do not decay.
    pub value: f64,
    pub sigma: f64,
    pub amplitude: f64,
    pub points: usize,
}

/// Weighted least squares of `ln y` against `x`.
pub fn fit_exponential_decay(
    xs: &[f64],
    ys: &[f64],
    model: DecayModel,
    weights: Weights<'_>,
) -> Result<DecayFit> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    if xs.len() < 3 {
        return Err(Error::invalid("decay fit", "need at least 3 points"));
    }
    if let Weights::Sigma(s) = weights {
        if s.len() != ys.len() {
            return Err(Error::DimensionMismatch {
                expected: ys.len(),
                found: s.len(),
            });
        }
    }
    if let Some(y) = ys.iter().find(|y| !(**y > 0.0 && y.is_finite())) {
        return Err(Error::invalid("ys", format!("must be positive and finite, got {y}")));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("xs"));
    }

    let w: Vec<f64> = match weights {
        Weights::Poisson => ys.to_vec(),
        Weights::Uniform => vec![1.0; ys.len()],
        Weights::Sigma(s) => ys.iter().zip(s).map(|(y, s)| (y / s).powi(2)).collect(),
    };
    let mut ata = Matrix2::zeros();
    let mut atb = Vector2::zeros();
    for ((&x, &y), &wi) in xs.iter().zip(ys).zip(&w) {
        let l = y.ln();
        ata += wi * Matrix2::new(1.0, x, x, x * x);
        atb += wi * Vector2::new(l, x * l);
    }
    let det = ata.determinant();
    let scale = ata[(0, 0)] * ata[(1, 1)];
    if !(det.abs() > 1e-12 * scale) {
        return Err(Error::invalid("xs", "degenerate abscissae"));
    }
    let inv = ata.try_inverse().ok_or_else(|| Error::invalid("xs", "degenerate abscissae"))?;
    let coef = inv * atb;
    let (a0, slope) = (coef[0], coef[1]);

    let mut var_slope = inv[(1, 1)];
    if matches!(weights, Weights::Uniform) {
        let rss: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| (y.ln() - a0 - slope * x).powi(2))
            .sum();
        var_slope *= rss / (xs.len() - 2) as f64;
    }
    let s_slope = var_slope.max(0.0).sqrt();
    let (value, sigma) = match model {
        DecayModel::Geometric => (slope.exp(), slope.exp() * s_slope),
        DecayModel::Exponential => {
            if slope >= 0.0 {
                (f64::INFINITY, f64::INFINITY)
            } else {
                (-1.0 / slope, s_slope / (slope * slope))
            }
        }
    };
    Ok(DecayFit {
        model,
        value,
        sigma,
        amplitude: a0.exp(),
        points: xs.len(),
    })
}

/// `A·exp(−t/τ)` with multiplicative Gaussian noise of relative size `noise`.
pub fn synthetic_decay_curve(
    times: &[f64],
    amplitude: f64,
    tau: f64,
    noise: f64,
    seed: u64,
) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    times
        .iter()
        .map(|t| {
            let z: f64 = StandardNormal.sample(&mut rng);
            amplitude * (-t / tau).exp() * (1.0 + noise * z)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_geometric() {
        let xs: Vec<f64> = (1..=10).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|n| 3.0 * 0.149f64.powf(*n)).collect();
        let f = fit_exponential_decay(&xs, &ys, DecayModel::Geometric, Weights::Uniform).unwrap();
        assert!((f.value - 0.149).abs() < 1e-9);
        assert!((f.amplitude - 3.0).abs() < 1e-9);
    }

    #[test]
    fn flat_data_has_infinite_tau() {
        let f = fit_exponential_decay(
            &[1.0, 2.0, 3.0],
            &[1.0, 1.0, 1.0],
            DecayModel::Exponential,
            Weights::Uniform,
        )
        .unwrap();
        assert!(f.value.is_infinite());
    }

    #[test]
    fn rejects_bad_input() {
        let e = DecayModel::Exponential;
        assert!(fit_exponential_decay(&[1.0, 2.0], &[1.0, 0.5], e, Weights::Uniform).is_err());
        assert!(fit_exponential_decay(&[1.0, 2.0, 3.0], &[1.0, 0.0, 0.2], e, Weights::Uniform).is_err());
        assert!(fit_exponential_decay(&[1.0, 1.0, 1.0], &[1.0, 0.5, 0.2], e, Weights::Uniform).is_err());
    }
}
