//! Fast photon model for pulse refinement.
//!
//! Before emission the state stays inside `{|↑,0⟩, |↓′,0⟩, |↓,1⟩}`; every
//! decay leaves that block for `|↓,0⟩`. Propagating the unnormalized block
//! amplitude with `H − (i/2)ΣL†L` therefore gives the master-equation
//! cavity population exactly, as long as nothing returns from `|↓,0⟩`
//! (reverse spin relaxation is neglected here and restored by the final
//! master-equation check).

use nalgebra::{Matrix3, Vector3};

use crate::dynamics::{CqedParams, TWO_PI};
use crate::C64;

pub(crate) type State = Vector3<C64>;

#[derive(Debug, Clone)]
pub(crate) struct BlockModel {
    pub t0: f64,
    pub h: f64,
    pub n_steps: usize,
    base: Matrix3<C64>,
    kappa: f64,
}

impl BlockModel {
    pub fn new(params: &CqedParams, t0: f64, t1: f64, h: f64) -> Self {
        let n_steps = ((t1 - t0) / h).ceil().max(1.0) as usize;
        let h = (t1 - t0) / n_steps as f64;
        let kappa = TWO_PI * params.kappa_tot();
        let gamma = TWO_PI * params.gamma;
        let gamma_t = TWO_PI * params.gamma_t;
        let mut base = Matrix3::zeros();
        base[(0, 0)] = C64::new(0.0, -0.5 * gamma_t);
        base[(1, 1)] = C64::new(TWO_PI * params.delta, -0.5 * gamma);
        base[(2, 2)] = C64::new(TWO_PI * (params.delta - params.delta_c), -0.5 * kappa);
        base[(1, 2)] = C64::new(TWO_PI * params.g, 0.0);
        base[(2, 1)] = C64::new(TWO_PI * params.g, 0.0);
        Self {
            t0,
            h,
            n_steps,
            base,
            kappa,
        }
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.h
    }

    pub fn midpoint(&self, k: usize) -> f64 {
        self.t0 + (k as f64 + 0.5) * self.h
    }

    /// `exp(−i h H_eff)` for a real Rabi frequency (GHz) held over the step.
    pub fn propagator(&self, omega_rabi: f64) -> Matrix3<C64> {
        let mut m = self.base;
        // Matrix element 2π·Ω_R/2.
        let w = C64::new(std::f64::consts::PI * omega_rabi, 0.0);
        m[(1, 0)] = w;
        m[(0, 1)] = w;
        (m * C64::new(0.0, -self.h)).exp()
    }

    pub fn initial_state() -> State {
        Vector3::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0))
    }

    pub fn flux(&self, psi: &State) -> f64 {
        self.kappa * psi[2].norm_sqr()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{evolve, photon_flux, photon_system, BasisLabel, DensityMatrix, TimeGrid};
    use crate::pulse::PulseEnvelope;

    #[test]
    fn agrees_with_master_equation_without_return() {
        let mut p = CqedParams::reference();
        p.spin_relaxation = crate::dynamics::SpinRelaxation::DownOnly;
        p.gamma_t = 1e-3;
        let omega_r = 0.05;
        let model = BlockModel::new(&p, 0.0, 40.0, 0.05);
        let u = model.propagator(omega_r);
        let mut psi = BlockModel::initial_state();
        let mut fluxes = vec![model.flux(&psi)];
        for _ in 0..model.n_steps {
            psi = u * psi;
            fluxes.push(model.flux(&psi));
        }
        let env = PulseEnvelope::tabulated_real(vec![-1.0, 41.0], &[omega_r / 2.0; 2]).unwrap();
        let sys = photon_system(&p, &env, None).unwrap();
        let rho0 = DensityMatrix::pure(BasisLabel::Up0, 4).unwrap();
        let grid = TimeGrid::new(0.0, 40.0, model.n_steps + 1)
            .unwrap()
            .with_tolerance(1e-10, 1e-16);
        let traj = evolve(&sys, &rho0, &grid).unwrap();
        for (k, (_, rho)) in traj.iter().enumerate() {
            let f = photon_flux(rho, &p);
            assert!((f - fluxes[k]).abs() < 1e-6 * f.max(1e-6), "k={k}: {f} vs {}", fluxes[k]);
        }
    }
}
