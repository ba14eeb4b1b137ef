//! Adaptive Dormand–Prince 5(4) integrator for complex-valued linear and
//! nonlinear ODE systems.
//!
//! The stepper is written for small dense states (vectorized density
//! matrices of dimension ≤ 25) and keeps its step size across calls to
//! [`Dopri5::advance_to`], so sampling a trajectory on an output grid does
//! not restart the step-size controller.

use crate::{Error, Result, C64};

/// Right-hand side of `dy/dt = f(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;

    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]);

    /// Applied to the state and to the last stage derivative after each
    /// accepted step. Must be linear and commute with `rhs`.
    fn project(&self, _y: &mut [C64]) {}

    /// Upper bound on the step size, e.g. the spacing of tabulated inputs.
    fn max_step_hint(&self) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Dopri5Options {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for Dopri5Options {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            h_init: None,
            h_max: f64::INFINITY,
            h_min: 1e-14,
            max_steps: 50_000_000,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Step-size controller exponents (PI control, Hairer & Wanner II.4).
const BETA: f64 = 0.04;
const ALPHA: f64 = 0.2 - 0.75 * BETA;

pub struct Dopri5<'a, S: OdeSystem> {
    sys: &'a S,
    opts: Dopri5Options,
    t: f64,
    y: Vec<C64>,
    h: f64,
    err_old: f64,
    k: [Vec<C64>; 7],
    ytmp: Vec<C64>,
    ynew: Vec<C64>,
    pub accepted: usize,
    pub rejected: usize,
}

impl<'a, S: OdeSystem> Dopri5<'a, S> {
    pub fn new(sys: &'a S, t0: f64, y0: &[C64], opts: Dopri5Options) -> Result<Self> {
        let n = sys.dim();
        if y0.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: y0.len(),
            });
        }
        if y0.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("initial state"));
        }
        let zero = vec![C64::new(0.0, 0.0); n];
        let mut k = [
            zero.clone(),
            zero.clone(),
            zero.clone(),
            zero.clone(),
            zero.clone(),
            zero.clone(),
            zero.clone(),
        ];
        sys.rhs(t0, y0, &mut k[0]);
        let mut opts = opts;
        if let Some(hint) = sys.max_step_hint() {
            opts.h_max = opts.h_max.min(hint);
        }
        let h = match opts.h_init {
            Some(h) => h,
            None => initial_step(y0, &k[0], &opts),
        };
        Ok(Self {
            sys,
            opts,
            t: t0,
            y: y0.to_vec(),
            h: h.min(opts.h_max),
            err_old: 1e-4,
            k,
            ytmp: zero.clone(),
            ynew: zero,
            accepted: 0,
            rejected: 0,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &[C64] {
        &self.y
    }

    /// Integrates until `t_target`, landing on it exactly.
    pub fn advance_to(&mut self, t_target: f64) -> Result<()> {
        let n = self.y.len();
        let mut steps = 0usize;
        while self.t < t_target {
            steps += 1;
            if steps > self.opts.max_steps {
                return Err(Error::IntegratorFailure {
                    t: self.t,
                    reason: "maximum step count exceeded".into(),
                });
            }
            let remaining = t_target - self.t;
            let mut h = self.h.min(self.opts.h_max);
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            let t = self.t;
            let sys = self.sys;
            let (k1, rest) = self.k.split_at_mut(1);
            let k1 = &k1[0];
            let [k2, k3, k4, k5, k6, k7] = rest else {
                unreachable!()
            };

            for i in 0..n {
                self.ytmp[i] = self.y[i] + h * A21 * k1[i];
            }
            sys.rhs(t + C2 * h, &self.ytmp, k2);
            for i in 0..n {
                self.ytmp[i] = self.y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            sys.rhs(t + C3 * h, &self.ytmp, k3);
            for i in 0..n {
                self.ytmp[i] = self.y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            sys.rhs(t + C4 * h, &self.ytmp, k4);
            for i in 0..n {
                self.ytmp[i] =
                    self.y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            sys.rhs(t + C5 * h, &self.ytmp, k5);
            for i in 0..n {
                self.ytmp[i] = self.y[i]
                    + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            sys.rhs(t + h, &self.ytmp, k6);
            for i in 0..n {
                self.ynew[i] = self.y[i]
                    + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            sys.rhs(t + h, &self.ynew, k7);

            let mut err_sq = 0.0;
            for i in 0..n {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                        + E7 * k7[i]);
                let scale =
                    self.opts.atol + self.opts.rtol * self.y[i].norm().max(self.ynew[i].norm());
                let r = e.norm() / scale;
                err_sq += r * r;
            }
            let err = (err_sq / n as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::IntegratorFailure {
                    t,
                    reason: "non-finite error estimate".into(),
                });
            }

            if err <= 1.0 {
                let fac = (0.9 * err.max(1e-10).powf(-ALPHA) * self.err_old.powf(BETA))
                    .clamp(0.2, 5.0);
                self.err_old = err.max(1e-4);
                self.t = if last { t_target } else { t + h };
                std::mem::swap(&mut self.y, &mut self.ynew);
                sys.project(&mut self.y);
                sys.project(k7);
                self.k.swap(0, 6);
                self.accepted += 1;
                // Keep the controller's step, not the truncated final one.
                if !last || fac * h > self.h {
                    self.h = fac * h;
                }
            } else {
                let fac = (0.9 * err.powf(-ALPHA)).clamp(0.2, 1.0);
                self.h = fac * h;
                self.rejected += 1;
                if self.h < self.opts.h_min {
                    return Err(Error::IntegratorFailure {
                        t,
                        reason: format!("step size {:e} below minimum", self.h),
                    });
                }
            }
        }
        Ok(())
    }
}

fn initial_step(y0: &[C64], f0: &[C64], opts: &Dopri5Options) -> f64 {
    let n = y0.len() as f64;
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for (y, f) in y0.iter().zip(f0) {
        let sc = opts.atol + opts.rtol * y.norm();
        d0 += (y.norm() / sc).powi(2);
        d1 += (f.norm() / sc).powi(2);
    }
    let d0 = (d0 / n).sqrt();
    let d1 = (d1 / n).sqrt();
    let h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h.min(opts.h_max).max(opts.h_min)
}

/// Integrates `sys` from `t0` and returns the state at each time in `t_out`
/// (which must be nondecreasing and start at or after `t0`).
pub fn integrate<S: OdeSystem>(
    sys: &S,
    t0: f64,
    y0: &[C64],
    t_out: &[f64],
    opts: Dopri5Options,
) -> Result<Vec<Vec<C64>>> {
    let mut stepper = Dopri5::new(sys, t0, y0, opts)?;
    let mut out = Vec::with_capacity(t_out.len());
    for &t in t_out {
        if t < stepper.t() {
            return Err(Error::invalid("t_out", "output times must be nondecreasing"));
        }
        stepper.advance_to(t)?;
        out.push(stepper.state().to_vec());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Decay {
        rate: C64,
    }

    impl OdeSystem for Decay {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, _t: f64, y: &[C64], dy: &mut [C64]) {
            dy[0] = self.rate * y[0];
        }
    }

    #[test]
    fn complex_exponential_matches_closed_form() {
        let sys = Decay {
            rate: C64::new(-0.3, 2.0),
        };
        let ts: Vec<f64> = (0..=10).map(|i| i as f64 * 0.7).collect();
        let out = integrate(&sys, 0.0, &[C64::new(1.0, 0.0)], &ts, Dopri5Options::default())
            .unwrap();
        for (t, y) in ts.iter().zip(&out) {
            let exact = (sys.rate * *t).exp();
            assert!((y[0] - exact).norm() < 1e-7, "t={t}");
        }
    }

    struct Oscillator;

    impl OdeSystem for Oscillator {
        fn dim(&self) -> usize {
            2
        }
        fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) {
            // Driven: y0' = y1, y1' = -y0 + cos(t)
            dy[0] = y[1];
            dy[1] = -y[0] + C64::new(t.cos(), 0.0);
        }
    }

    #[test]
    fn resonant_driven_oscillator() {
        // y0(t) = t sin(t) / 2 for y(0) = 0.
        let out = integrate(
            &Oscillator,
            0.0,
            &[C64::new(0.0, 0.0); 2],
            &[5.0, 12.0],
            Dopri5Options::default(),
        )
        .unwrap();
        for (t, y) in [5.0f64, 12.0].iter().zip(&out) {
            assert!((y[0].re - t * t.sin() / 2.0).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_wrong_dimension() {
        let r = Dopri5::new(&Oscillator, 0.0, &[C64::new(0.0, 0.0)], Dopri5Options::default());
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }
}
