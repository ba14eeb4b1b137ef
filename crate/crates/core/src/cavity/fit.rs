use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::reflection::{reflection_coefficient, ReflectionSpectrum};
use crate::dynamics::CqedParams;
use crate::lsq::{levenberg_marquardt, Bounds, LmOptions, Problem, Termination};
use crate::{Error, Result};

/// Parameters of the reflection model. Rates and frequencies in GHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitParams {
    pub g: f64,
    pub kappa_tot: f64,
    pub kappa_w: f64,
    pub gamma: f64,
    pub omega_c: f64,
    pub omega_a: f64,
}

impl FitParams {
    pub fn from_cqed(p: &CqedParams, omega_c: f64) -> Self {
        Self {
            g: p.g,
            kappa_tot: p.kappa_tot(),
            kappa_w: p.kappa_w,
            gamma: p.gamma,
            omega_c,
            omega_a: omega_c + p.delta_c,
        }
    }

    /// Rebuilds dynamics parameters; the spin-side fields come from `base`.
    pub fn to_cqed(&self, base: &CqedParams) -> CqedParams {
        CqedParams {
            g: self.g,
            kappa_w: self.kappa_w,
            kappa_s: self.kappa_tot - self.kappa_w,
            gamma: self.gamma,
            delta_c: self.omega_a - self.omega_c,
            ..*base
        }
    }

    pub fn kappa_s(&self) -> f64 {
        self.kappa_tot - self.kappa_w
    }

    pub fn reflection(&self, omega: f64) -> f64 {
        reflection_coefficient(
            omega,
            self.g,
            self.kappa_tot,
            self.kappa_w,
            self.gamma,
            self.omega_c,
            self.omega_a,
        )
    }

    // internal vector: [g, κ_tot, κ_w/κ_tot, γ, ω_c, ω_a]
    fn to_vec(self) -> Vec<f64> {
        vec![
            self.g,
            self.kappa_tot,
            self.kappa_w / self.kappa_tot,
            self.gamma,
            self.omega_c,
            self.omega_a,
        ]
    }

    fn from_vec(v: &[f64]) -> Self {
        Self {
            g: v[0],
            kappa_tot: v[1],
            kappa_w: v[2] * v[1],
            gamma: v[3],
            omega_c: v[4],
            omega_a: v[5],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Number of starting points; the first is the initial guess itself.
    pub starts: usize,
    /// Relative log-normal jitter on the rates of the other starts.
    pub jitter: f64,
    pub seed: u64,
    /// Restrict the fit to `κ_w ≥ κ_tot/2`.
    pub overcoupled: bool,
    /// Divide out a quadratic baseline fitted to the far wings first.
    pub detrend: bool,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            starts: 5,
            jitter: 0.1,
            seed: 0,
            overcoupled: true,
            detrend: false,
            max_iter: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CqedFitResult {
    pub params: FitParams,
    /// One-sigma uncertainties from the scaled covariance; NaN when the
    /// normal matrix is singular.
    pub sigma: FitParams,
    pub cost: f64,
    pub rms: f64,
    pub converged: bool,
    pub best_start: usize,
    pub start_costs: Vec<f64>,
}

struct SpectrumProblem<'a> {
    data: &'a [(f64, f64)],
    /// `(center, scale)` of a jointly fitted quadratic multiplicative
    /// baseline in parameters 6..9.
    baseline: Option<(f64, f64)>,
}

impl SpectrumProblem<'_> {
    fn model(&self, p: &[f64], w: f64) -> f64 {
        let r = FitParams::from_vec(p).reflection(w);
        match self.baseline {
            Some((c, s)) => {
                let x = (w - c) / s;
                r * (p[6] + p[7] * x + p[8] * x * x)
            }
            None => r,
        }
    }
}

impl Problem for SpectrumProblem<'_> {
    fn n_params(&self) -> usize {
        if self.baseline.is_some() {
            9
        } else {
            6
        }
    }

    fn residuals(&mut self, p: &[f64], out: &mut Vec<f64>) -> Result<()> {
        out.clear();
        out.extend(self.data.iter().map(|&(w, r)| self.model(p, w) - r));
        Ok(())
    }
}

/// Fits `(g, κ_tot, κ_w, γ, ω_c, ω_a)` to a reflection spectrum by bounded
/// Levenberg-Marquardt from several jittered starts. The lowest final cost
/// wins; ties go to the smallest parameter norm.
///
/// With `detrend`, a quadratic multiplicative baseline centred on the
/// initial cavity frequency is fitted jointly and discarded.
pub fn fit_cqed_params(
    spectrum: &ReflectionSpectrum,
    initial: &FitParams,
    opts: &FitOptions,
) -> Result<CqedFitResult> {
    fit_points(&spectrum.points, initial, opts)
}

fn fit_points(
    data: &[(f64, f64)],
    initial: &FitParams,
    opts: &FitOptions,
) -> Result<CqedFitResult> {
    if opts.starts == 0 {
        return Err(Error::invalid("starts", "need at least one start"));
    }
    if !(initial.kappa_tot > 0.0 && initial.gamma > 0.0 && initial.kappa_w > 0.0) {
        return Err(Error::invalid("initial", "rates must be positive"));
    }
    if data.len() < 7 {
        return Err(Error::FitFailure("fewer data points than parameters".into()));
    }

    let x_lo = if opts.overcoupled { 0.5 } else { 0.0 };
    let baseline = opts
        .detrend
        .then_some((initial.omega_c, initial.kappa_tot));
    let mut bounds = Bounds {
        lower: vec![0.0, 1e-6, x_lo, 1e-6, f64::NEG_INFINITY, f64::NEG_INFINITY],
        upper: vec![f64::INFINITY, f64::INFINITY, 1.0, f64::INFINITY, f64::INFINITY, f64::INFINITY],
    };
    if baseline.is_some() {
        bounds.lower.extend([0.0, f64::NEG_INFINITY, f64::NEG_INFINITY]);
        bounds.upper.extend([f64::INFINITY; 3]);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut base = initial.to_vec();
    if baseline.is_some() {
        base.extend([1.0, 0.0, 0.0]);
    }
    let mut starts = vec![base.clone()];
    for _ in 1..opts.starts {
        let mut z = || -> f64 { StandardNormal.sample(&mut rng) };
        let mut s = base.clone();
        s[0] *= (opts.jitter * z()).exp();
        s[1] *= (opts.jitter * z()).exp();
        s[2] = (s[2] + 0.25 * opts.jitter * z()).clamp(x_lo + 1e-3, 1.0 - 1e-3);
        s[3] *= (opts.jitter * z()).exp();
        s[4] += opts.jitter * 0.1 * initial.kappa_tot * z();
        s[5] += opts.jitter * initial.gamma * z();
        starts.push(s);
    }
    for s in &mut starts {
        bounds.project(s);
    }

    let lm = LmOptions {
        max_iter: opts.max_iter,
        ..LmOptions::default()
    };
    let runs: Vec<_> = starts
        .par_iter()
        .map(|s| {
            let mut problem = SpectrumProblem { data, baseline };
            levenberg_marquardt(&mut problem, s, &bounds, &lm)
        })
        .collect();

    let start_costs: Vec<f64> = runs
        .iter()
        .map(|r| r.as_ref().map_or(f64::INFINITY, |r| r.cost))
        .collect();
    let mut best: Option<usize> = None;
    for (i, run) in runs.iter().enumerate() {
        let Ok(run) = run else { continue };
        if !run.cost.is_finite() {
            continue;
        }
        match best {
            None => best = Some(i),
            Some(b) => {
                let cb = start_costs[b];
                let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
                let tie = (run.cost - cb).abs() <= 1e-12 * cb.max(1e-300);
                let other = runs[b].as_ref().expect("best run is Ok");
                if run.cost < cb && !tie || tie && norm(&run.params) < norm(&other.params) {
                    best = Some(i);
                }
            }
        }
    }
    let Some(b) = best else {
        let reason = runs
            .into_iter()
            .find_map(|r| r.err())
            .map_or_else(|| "non-finite cost".to_string(), |e| e.to_string());
        return Err(Error::FitFailure(reason));
    };
    let run = runs[b].as_ref().expect("best run is Ok");
    let params = FitParams::from_vec(&run.params[..6]);

    let nan = f64::NAN;
    let sigma = match run.covariance() {
        Some(c) => {
            let sd = |i: usize| c[(i, i)].max(0.0).sqrt();
            let (k, x) = (run.params[1], run.params[2]);
            // κ_w = x·κ_tot
            let var_kw = x * x * c[(1, 1)] + k * k * c[(2, 2)] + 2.0 * x * k * c[(1, 2)];
            FitParams {
                g: sd(0),
                kappa_tot: sd(1),
                kappa_w: var_kw.max(0.0).sqrt(),
                gamma: sd(3),
                omega_c: sd(4),
                omega_a: sd(5),
            }
        }
        None => FitParams {
            g: nan,
            kappa_tot: nan,
            kappa_w: nan,
            gamma: nan,
            omega_c: nan,
            omega_a: nan,
        },
    };
    Ok(CqedFitResult {
        params,
        sigma,
        cost: run.cost,
        rms: (run.cost / data.len() as f64).sqrt(),
        converged: run.termination == Termination::Converged,
        best_start: b,
        start_costs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cavity::{synthetic_spectrum, SpectrumGrid};

    #[test]
    fn noiseless_fit_is_exact() {
        let p = CqedParams::reference();
        let s = synthetic_spectrum(&p, 0.0, 19.88, &SpectrumGrid::default(), 0.0, 0).unwrap();
        let truth = FitParams::from_cqed(&p, 0.0);
        let guess = FitParams {
            g: 6.0,
            kappa_tot: 300.0,
            kappa_w: 200.0,
            gamma: 0.12,
            omega_c: 5.0,
            omega_a: 19.9,
        };
        let fit = fit_cqed_params(&s, &guess, &FitOptions::default()).unwrap();
        assert!((fit.params.g / truth.g - 1.0).abs() < 1e-5, "{:?}", fit.params);
        assert!((fit.params.kappa_w / truth.kappa_w - 1.0).abs() < 1e-5);
        assert!((fit.params.gamma / truth.gamma - 1.0).abs() < 1e-5);
        assert!(fit.params.kappa_w >= fit.params.kappa_tot / 2.0);
    }

    #[test]
    fn detrending_removes_tilt() {
        let p = CqedParams::reference();
        let s = synthetic_spectrum(&p, 0.0, 19.88, &SpectrumGrid::default(), 0.0, 0).unwrap();
        let tilted: Vec<_> = s
            .points
            .iter()
            .map(|&(w, r)| (w, r * (0.95 + 0.05 * w / 600.0)))
            .collect();
        let t = ReflectionSpectrum::new(tilted).unwrap();
        let guess = FitParams::from_cqed(&p, 0.0);
        let opts = FitOptions {
            detrend: true,
            ..FitOptions::default()
        };
        let fit = fit_cqed_params(&t, &guess, &opts).unwrap();
        assert!((fit.params.kappa_w / 240.0 - 1.0).abs() < 0.05, "{:?}", fit.params);
    }
}
