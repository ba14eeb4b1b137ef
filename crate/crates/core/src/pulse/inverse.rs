use nalgebra::{DMatrix, DVector, Matrix3};
use serde::{Deserialize, Serialize};

use super::adiabatic::{envelope_amplitude, simulate_photon};
use super::forward::{BlockModel, State};
use super::spline::UniformSpline;
use super::{PhotonWaveform, PulseEnvelope};
use crate::dynamics::{CqedParams, TimeGrid, TWO_PI};
use crate::lsq::{levenberg_marquardt, Bounds, LmOptions, Problem};
use crate::{Error, Result, C64};

/// How a target waveform's integral is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "snake_case")]
pub enum Normalization {
    /// Use the target as given.
    Keep,
    /// Rescale to this total emission probability.
    Total(f64),
    /// Rescale to this fraction of the cavity branching ratio.
    FractionOfBranching(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionOptions {
    /// Acceptable RMS waveform error relative to the target peak.
    pub tolerance: f64,
    pub normalization: Normalization,
    /// Spline knot spacing (ns); defaults to `min(σ_target/2, 5 ns)`.
    pub knot_spacing: Option<f64>,
    /// Required headroom below the branching ratio.
    pub margin: f64,
    /// Levenberg–Marquardt iterations on the fast model.
    pub max_iterations: usize,
    /// Correction iterations driven by master-equation residuals.
    pub correction_iterations: usize,
    /// Time step of the fast model (ns).
    pub step: f64,
}

impl Default for InversionOptions {
    fn default() -> Self {
        Self {
            tolerance: 0.02,
            normalization: Normalization::FractionOfBranching(0.8),
            knot_spacing: None,
            margin: 0.005,
            max_iterations: 40,
            correction_iterations: 6,
            step: 0.05,
        }
    }
}

#[derive(Debug, Clone)]
pub struct InversionResult {
    pub envelope: PulseEnvelope,
    /// The target after normalization.
    pub target: PhotonWaveform,
    /// Master-equation photon produced by `envelope`.
    pub achieved: PhotonWaveform,
    /// RMS of `achieved − target` relative to the target peak.
    pub rms_error: f64,
    pub converged: bool,
    pub iterations: usize,
    pub diagnostic: Option<String>,
}

/// Width scale of the sharpest feature around the global peak: half-width
/// at half maximum converted to a Gaussian σ.
fn target_sigma(target: &PhotonWaveform) -> f64 {
    let (tp, fp) = target.peak();
    let t = target.times();
    let f = target.flux();
    let ip = t.partition_point(|&x| x < tp).min(t.len() - 1);
    let left = (0..ip).rev().find(|&i| f[i] < 0.5 * fp).map(|i| tp - t[i]);
    let right = (ip..t.len()).find(|&i| f[i] < 0.5 * fp).map(|i| t[i] - tp);
    let hwhm = match (left, right) {
        (Some(a), Some(b)) => a.min(b),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => t[t.len() - 1] - t[0],
    };
    hwhm / (2.0 * 2f64.ln()).sqrt()
}

struct Refinement<'a> {
    model: &'a BlockModel,
    spline: UniformSpline,
    /// Target sample times mapped to (step index, interpolation weight).
    sample_map: Vec<(usize, f64)>,
    target: Vec<f64>,
    scale: f64,
    /// Finite-difference step for coefficients.
    dc: f64,
    // Scratch from the last base run.
    omega: Vec<f64>,
    props: Vec<Matrix3<C64>>,
    states: Vec<State>,
}

impl<'a> Refinement<'a> {
    fn new(model: &'a BlockModel, spline: UniformSpline, target: &PhotonWaveform, dc: f64) -> Self {
        let sample_map = target
            .times()
            .iter()
            .map(|&t| {
                let x = ((t - model.t0) / model.h).clamp(0.0, model.n_steps as f64);
                let k = (x.floor() as usize).min(model.n_steps - 1);
                (k, x - k as f64)
            })
            .collect();
        Self {
            model,
            spline,
            sample_map,
            target: target.flux().to_vec(),
            scale: 1.0 / target.peak().1,
            dc,
            omega: Vec::new(),
            props: Vec::new(),
            states: Vec::new(),
        }
    }

    fn set_coeffs(&mut self, c: &[f64]) {
        self.spline.coeffs.copy_from_slice(c);
    }

    fn base_run(&mut self, c: &[f64]) {
        self.set_coeffs(c);
        let m = self.model;
        self.omega = (0..m.n_steps).map(|k| self.spline.eval(m.midpoint(k))).collect();
        self.props = self.omega.iter().map(|&w| m.propagator(w)).collect();
        self.states.clear();
        let mut psi = BlockModel::initial_state();
        self.states.push(psi);
        for u in &self.props {
            psi = u * psi;
            self.states.push(psi);
        }
    }

    fn fluxes_into(&self, out: &mut Vec<f64>) {
        out.clear();
        for &(k, w) in &self.sample_map {
            let f0 = self.model.flux(&self.states[k]);
            let f1 = self.model.flux(&self.states[k + 1]);
            out.push((1.0 - w) * f0 + w * f1);
        }
    }

    fn model_flux(&mut self, c: &[f64]) -> Vec<f64> {
        self.base_run(c);
        let mut out = Vec::new();
        self.fluxes_into(&mut out);
        out
    }

    /// Forward-difference Jacobian of the scaled model flux, reusing the
    /// base run outside each coefficient's support.
    fn flux_jacobian(&mut self, c: &[f64], dc: f64) -> DMatrix<f64> {
        self.base_run(c);
        let m = self.model;
        let n = c.len();
        let rows = self.sample_map.len();
        let mut jac = DMatrix::zeros(rows, n);
        let mut base = Vec::new();
        self.fluxes_into(&mut base);
        let mut spline = self.spline.clone();
        let mut states: Vec<State> = Vec::with_capacity(m.n_steps + 1);
        for j in 0..n {
            let (lo, hi) = spline.support(j);
            if hi <= m.t0 || lo >= m.time(m.n_steps) {
                continue;
            }
            let k_lo = (((lo - m.t0) / m.h).floor().max(0.0)) as usize;
            let k_hi = ((((hi - m.t0) / m.h).ceil()) as usize).min(m.n_steps);
            spline.coeffs[j] = c[j] + dc;
            states.clear();
            let mut psi = self.states[k_lo];
            states.push(psi);
            for k in k_lo..m.n_steps {
                let u = if k < k_hi {
                    m.propagator(spline.eval(m.midpoint(k)))
                } else {
                    self.props[k]
                };
                psi = u * psi;
                states.push(psi);
            }
            spline.coeffs[j] = c[j];
            for (row, &(k, w)) in self.sample_map.iter().enumerate() {
                if k + 1 <= k_lo {
                    continue;
                }
                let f0 = m.flux(&states[k - k_lo]);
                let f1 = m.flux(&states[k + 1 - k_lo]);
                let f = (1.0 - w) * f0 + w * f1;
                jac[(row, j)] = (f - base[row]) * self.scale / dc;
            }
        }
        jac
    }
}

impl Problem for Refinement<'_> {
    fn n_params(&self) -> usize {
        self.spline.coeffs.len()
    }

    fn residuals(&mut self, p: &[f64], out: &mut Vec<f64>) -> Result<()> {
        let f = self.model_flux(p);
        out.clear();
        out.extend(f.iter().zip(&self.target).map(|(m, t)| (m - t) * self.scale));
        Ok(())
    }

    fn jacobian(&mut self, p: &[f64], _r: &[f64]) -> Option<Result<DMatrix<f64>>> {
        Some(Ok(self.flux_jacobian(p, self.dc)))
    }
}

fn envelope_from_spline(spline: &UniformSpline, t0: f64, t1: f64, h: f64) -> Result<PulseEnvelope> {
    let n = ((t1 - t0) / h).ceil() as usize;
    let times: Vec<f64> = (0..=n).map(|k| t0 + (t1 - t0) * k as f64 / n as f64).collect();
    let values: Vec<f64> = times
        .iter()
        .map(|&t| envelope_amplitude(spline.eval(t).max(0.0)))
        .collect();
    PulseEnvelope::tabulated_real(times, &values)
}

fn me_waveform(params: &CqedParams, env: &PulseEnvelope, t0: f64, t1: f64, h: f64) -> Result<PhotonWaveform> {
    let samples = ((t1 - t0) / h).ceil() as usize + 1;
    simulate_photon(params, env, &TimeGrid::new(t0, t1, samples)?)
}

/// Finds a control pulse whose photon matches `target`.
///
/// A spline envelope is seeded from the adiabatic inversion
/// `Ω_R(t)² = Γ f(t) / (p_c − ∫f)`, refined by bounded least squares against
/// the fast block model, and finally corrected with master-equation
/// residuals. The Rabi frequency is bounded to `[0, Γ/2]`.
pub fn invert_target_shape(
    target: &PhotonWaveform,
    params: &CqedParams,
    opts: &InversionOptions,
) -> Result<InversionResult> {
    params.validate()?;
    let p_c = params.effective_cavity_branching();
    let t = target.times();
    let (t0, t1) = (t[0], t[t.len() - 1]);
    if target.is_zero() {
        let achieved = PhotonWaveform::zero(t.to_vec())?;
        return Ok(InversionResult {
            envelope: PulseEnvelope::zero(),
            target: target.clone(),
            achieved,
            rms_error: 0.0,
            converged: true,
            iterations: 0,
            diagnostic: None,
        });
    }
    let target = match opts.normalization {
        Normalization::Keep => target.clone(),
        Normalization::Total(p) => target.rescaled(p)?,
        Normalization::FractionOfBranching(x) => target.rescaled(x * p_c)?,
    };
    let p_max = p_c - opts.margin;
    if target.total_probability() > p_max {
        return Err(Error::Infeasible(format!(
            "target emits {:.4} but at most {:.4} is reachable",
            target.total_probability(),
            p_max
        )));
    }

    let gamma = (params.effective_cooperativity() + 1.0) * params.gamma;
    let omega_max = 0.5 * gamma;
    let sigma = target_sigma(&target);
    let spacing = opts.knot_spacing.unwrap_or((0.5 * sigma).min(5.0));
    let model = BlockModel::new(params, t0, t1, opts.step);

    // Adiabatic seed on the model midpoints.
    let mids: Vec<f64> = (0..model.n_steps).map(|k| model.midpoint(k)).collect();
    let mut cumulative = 0.0;
    let mut prev = (t0, target.eval(t0));
    let mut seed = Vec::with_capacity(mids.len());
    for &tm in &mids {
        let f = target.eval(tm);
        cumulative += 0.5 * (tm - prev.0) * (f + prev.1);
        prev = (tm, f);
        let remaining = (p_c - cumulative).max(1e-3 * p_c);
        let w2 = gamma * f / (TWO_PI * remaining);
        seed.push(w2.sqrt().min(omega_max));
    }
    let mut spline = UniformSpline::covering(t0, t1, spacing)?;
    spline.fit(&mids, &seed)?;
    for c in spline.coeffs.iter_mut() {
        *c = c.clamp(0.0, omega_max);
    }
    let n = spline.coeffs.len();
    let bounds = Bounds {
        lower: vec![0.0; n],
        upper: vec![omega_max; n],
    };
    let c0 = spline.coeffs.clone();
    let mut problem = Refinement::new(&model, spline.clone(), &target, 1e-7 * omega_max);
    let lm = levenberg_marquardt(
        &mut problem,
        &c0,
        &bounds,
        &LmOptions {
            max_iter: opts.max_iterations,
            ftol: 1e-8,
            ..Default::default()
        },
    )?;
    let mut coeffs = lm.params.clone();
    let mut iterations = lm.iterations;

    let evaluate = |coeffs: &[f64]| -> Result<(PulseEnvelope, PhotonWaveform, f64)> {
        let mut s = spline.clone();
        s.coeffs.copy_from_slice(coeffs);
        let env = envelope_from_spline(&s, t0, t1, opts.step)?;
        let achieved = me_waveform(params, &env, t0, t1, opts.step)?;
        let err = target.relative_rms_error(&achieved);
        Ok((env, achieved, err))
    };
    let mut best = evaluate(&coeffs)?;

    // Defect correction: master-equation residuals, fast-model Jacobian.
    let scale = 1.0 / target.peak().1;
    let mut mu = 1e-3;
    let mut corrections = 0;
    while best.2 > opts.tolerance && corrections < opts.correction_iterations {
        corrections += 1;
        let jac = problem.flux_jacobian(&coeffs, problem.dc);
        let r = DVector::from_iterator(
            target.times().len(),
            target
                .times()
                .iter()
                .zip(target.flux())
                .map(|(&t, &f)| (best.1.eval(t) - f) * scale),
        );
        let jt = jac.transpose();
        let a = &jt * &jac;
        let g = &jt * r;
        let dmax = a.diagonal().max().max(f64::MIN_POSITIVE);
        let mut improved = false;
        for _ in 0..4 {
            let mut damped = a.clone();
            for i in 0..n {
                damped[(i, i)] += mu * a[(i, i)].max(1e-9 * dmax);
            }
            let Some(ch) = damped.cholesky() else {
                mu *= 10.0;
                continue;
            };
            let step = ch.solve(&(-&g));
            let trial: Vec<f64> = coeffs
                .iter()
                .zip(step.iter())
                .map(|(c, d)| (c + d).clamp(0.0, omega_max))
                .collect();
            let cand = evaluate(&trial)?;
            if cand.2 < best.2 {
                coeffs = trial;
                best = cand;
                mu = (mu / 3.0).max(1e-9);
                improved = true;
                break;
            }
            mu *= 10.0;
        }
        iterations += 1;
        if !improved {
            break;
        }
    }

    let (envelope, achieved, rms_error) = best;
    let converged = rms_error <= opts.tolerance;
    let diagnostic = (!converged).then(|| {
        format!(
            "refinement stagnated at relative RMS error {rms_error:.4} (tolerance {}), \
             fast-model cost {:.3e} after {} iterations ({:?})",
            opts.tolerance, lm.cost, lm.iterations, lm.termination
        )
    });
    Ok(InversionResult {
        envelope,
        target,
        achieved,
        rms_error,
        converged,
        iterations,
        diagnostic,
    })
}
