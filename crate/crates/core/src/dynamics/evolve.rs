use super::hamiltonian::LindbladSystem;
use super::DensityMatrix;
use crate::ode::{Dopri5, Dopri5Options, OdeSystem};
use crate::{Error, Result, C64};

/// Output sampling and tolerances for [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub samples: usize,
    pub rtol: f64,
    pub atol: f64,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, samples: usize) -> Result<Self> {
        let g = Self {
            t_start,
            t_end,
            samples,
            rtol: 1e-8,
            atol: 1e-10,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn with_tolerance(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.t_start.is_finite() || !self.t_end.is_finite() {
            return Err(Error::NonFinite("time grid"));
        }
        if self.t_end <= self.t_start {
            return Err(Error::invalid("t_end", "must exceed t_start"));
        }
        if self.samples < 2 {
            return Err(Error::invalid("samples", "need at least two output samples"));
        }
        if !(self.rtol > 0.0) || !(self.atol > 0.0) {
            return Err(Error::invalid("tolerance", "must be positive"));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.t_end - self.t_start) / (self.samples - 1) as f64
    }

    pub fn times(&self) -> Vec<f64> {
        let dt = self.step();
        (0..self.samples)
            .map(|k| {
                if k + 1 == self.samples {
                    self.t_end
                } else {
                    self.t_start + k as f64 * dt
                }
            })
            .collect()
    }
}

pub type Trajectory = Vec<(f64, DensityMatrix)>;

struct Vectorized<'a>(&'a LindbladSystem);

impl OdeSystem for Vectorized<'_> {
    fn dim(&self) -> usize {
        self.0.dim() * self.0.dim()
    }

    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) {
        self.0.derivative_flat(t, y, dy);
    }

    fn project(&self, y: &mut [C64]) {
        let n = self.0.dim();
        for i in 0..n {
            y[i * n + i].im = 0.0;
            for j in (i + 1)..n {
                let a = y[i * n + j];
                let b = y[j * n + i];
                let m = (a + b.conj()) * 0.5;
                y[i * n + j] = m;
                y[j * n + i] = m.conj();
            }
        }
    }

    fn max_step_hint(&self) -> Option<f64> {
        self.0.max_step_hint()
    }
}

/// Integrates the master equation and samples `ρ` on the grid.
pub fn evolve(system: &LindbladSystem, rho0: &DensityMatrix, grid: &TimeGrid) -> Result<Trajectory> {
    grid.validate()?;
    let n = system.dim();
    if rho0.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rho0.dim(),
        });
    }
    rho0.validate()?;
    let sys = Vectorized(system);
    let opts = Dopri5Options {
        rtol: grid.rtol,
        atol: grid.atol,
        ..Default::default()
    };
    let mut stepper = Dopri5::new(&sys, grid.t_start, &rho0.to_row_major(), opts)?;
    let mut out = Vec::with_capacity(grid.samples);
    for t in grid.times() {
        stepper.advance_to(t)?;
        out.push((t, DensityMatrix::from_row_major(n, stepper.state())));
    }
    Ok(out)
}
