//! Bounded Levenberg–Marquardt least squares.
//!
//! Bounds are handled by projecting each trial point onto the box, which is
//! adequate for the small, well-scaled problems in this crate (spectrum fits
//! with six parameters, spline pulse refinement with a few dozen).

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Residual model. `jacobian` may be left unimplemented, in which case
/// forward differences are used.
pub trait Problem {
    fn n_params(&self) -> usize;

    fn residuals(&mut self, p: &[f64], out: &mut Vec<f64>) -> Result<()>;

    fn jacobian(&mut self, _p: &[f64], _r: &[f64]) -> Option<Result<DMatrix<f64>>> {
        None
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Stop when the relative cost reduction of an accepted step is below this.
    pub ftol: f64,
    /// Stop when the step is below `xtol·(‖p‖ + xtol)`.
    pub xtol: f64,
    pub gtol: f64,
    pub lambda_init: f64,
    /// Relative forward-difference step.
    pub fd_step: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            ftol: 1e-12,
            xtol: 1e-12,
            gtol: 1e-14,
            lambda_init: 1e-3,
            fd_step: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Converged,
    MaxIterations,
    /// Damping grew without finding a decrease.
    Stagnated,
}

#[derive(Debug, Clone)]
pub struct LmResult {
    pub params: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Sum of squared residuals.
    pub cost: f64,
    pub jacobian: DMatrix<f64>,
    pub iterations: usize,
    pub termination: Termination,
}

impl LmResult {
    /// `s²(JᵀJ)⁻¹` with `s² = cost/(m − n)`; `None` if singular or
    /// underdetermined.
    pub fn covariance(&self) -> Option<DMatrix<f64>> {
        let m = self.residuals.len();
        let n = self.params.len();
        if m <= n {
            return None;
        }
        let s2 = self.cost / (m - n) as f64;
        let jtj = self.jacobian.transpose() * &self.jacobian;
        jtj.try_inverse().map(|inv| inv * s2)
    }
}

#[derive(Debug, Clone)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn unbounded(n: usize) -> Self {
        Self {
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn project(&self, p: &mut [f64]) {
        for (i, x) in p.iter_mut().enumerate() {
            *x = x.clamp(self.lower[i], self.upper[i]);
        }
    }
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

fn fd_jacobian<P: Problem>(
    problem: &mut P,
    p: &[f64],
    r: &[f64],
    bounds: &Bounds,
    rel: f64,
) -> Result<DMatrix<f64>> {
    let n = p.len();
    let m = r.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut q = p.to_vec();
    let mut rq = Vec::with_capacity(m);
    for j in 0..n {
        let mut h = rel * p[j].abs().max(1e-3);
        if p[j] + h > bounds.upper[j] {
            h = -h;
        }
        q[j] = p[j] + h;
        problem.residuals(&q, &mut rq)?;
        for i in 0..m {
            jac[(i, j)] = (rq[i] - r[i]) / h;
        }
        q[j] = p[j];
    }
    Ok(jac)
}

/// Minimizes `Σ r_i(p)²` inside `bounds` starting from `p0`.
pub fn levenberg_marquardt<P: Problem>(
    problem: &mut P,
    p0: &[f64],
    bounds: &Bounds,
    opts: &LmOptions,
) -> Result<LmResult> {
    let n = problem.n_params();
    if p0.len() != n || bounds.lower.len() != n || bounds.upper.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: p0.len(),
        });
    }
    let mut p = p0.to_vec();
    bounds.project(&mut p);
    let mut r = Vec::new();
    problem.residuals(&p, &mut r)?;
    let mut cost = sum_sq(&r);
    if !cost.is_finite() {
        return Err(Error::FitFailure("non-finite residuals at the starting point".into()));
    }
    let mut lambda = opts.lambda_init;
    let mut trial = vec![0.0; n];
    let mut r_trial = Vec::new();
    let mut termination = Termination::MaxIterations;
    let mut iterations = 0;
    let mut jac = match problem.jacobian(&p, &r) {
        Some(j) => j?,
        None => fd_jacobian(problem, &p, &r, bounds, opts.fd_step)?,
    };

    'outer: while iterations < opts.max_iter {
        iterations += 1;
        let jt = jac.transpose();
        let a = &jt * &jac;
        let g = &jt * DVector::from_column_slice(&r);
        if g.amax() <= opts.gtol {
            termination = Termination::Converged;
            break;
        }
        let dmax = a.diagonal().max().max(f64::MIN_POSITIVE);
        loop {
            let mut damped = a.clone();
            for i in 0..n {
                damped[(i, i)] += lambda * a[(i, i)].max(1e-9 * dmax);
            }
            let step = damped.cholesky().map(|c| c.solve(&(-&g)));
            let Some(step) = step else {
                lambda *= 10.0;
                if lambda > 1e16 {
                    termination = Termination::Stagnated;
                    break 'outer;
                }
                continue;
            };
            for i in 0..n {
                trial[i] = p[i] + step[i];
            }
            bounds.project(&mut trial);
            let step_norm: f64 = trial
                .iter()
                .zip(&p)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let p_norm: f64 = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            if step_norm <= opts.xtol * (p_norm + opts.xtol) {
                termination = Termination::Converged;
                break 'outer;
            }
            problem.residuals(&trial, &mut r_trial)?;
            let cost_trial = sum_sq(&r_trial);
            if cost_trial.is_finite() && cost_trial < cost {
                let reduction = (cost - cost_trial) / cost.max(f64::MIN_POSITIVE);
                std::mem::swap(&mut p, &mut trial);
                std::mem::swap(&mut r, &mut r_trial);
                cost = cost_trial;
                lambda = (lambda / 3.0).max(1e-12);
                if reduction < opts.ftol || cost == 0.0 {
                    termination = Termination::Converged;
                    break 'outer;
                }
                jac = match problem.jacobian(&p, &r) {
                    Some(j) => j?,
                    None => fd_jacobian(problem, &p, &r, bounds, opts.fd_step)?,
                };
                break;
            }
            lambda *= 4.0;
            if lambda > 1e16 {
                termination = Termination::Stagnated;
                break 'outer;
            }
        }
    }
    Ok(LmResult {
        params: p,
        residuals: r,
        cost,
        jacobian: jac,
        iterations,
        termination,
    })
}
