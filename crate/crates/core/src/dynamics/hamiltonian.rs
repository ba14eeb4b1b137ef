use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::params::{BasisLabel, CqedParams, SpinRelaxation};
use super::{DensityMatrix, TWO_PI};
use crate::pulse::PulseEnvelope;
use crate::{Error, Result, C64};

/// Physical process behind a collapse operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    /// Cavity decay, the photon that is collected.
    CavityEmission,
    /// Spontaneous emission from `|↓′⟩` outside the cavity mode.
    FreeSpace,
    /// Spin-qubit relaxation (no photon).
    SpinRelaxation,
    /// Decay of the re-initialization level back to `|↑⟩`.
    Repump,
}

/// Single-transition collapse operator `√rate |to⟩⟨from|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapseOp {
    pub to: BasisLabel,
    pub from: BasisLabel,
    /// Angular rate (1/ns).
    pub rate: f64,
    pub channel: Channel,
}

impl CollapseOp {
    pub fn amplitude(&self) -> f64 {
        self.rate.sqrt()
    }

    pub fn matrix(&self, dim: usize) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(dim, dim);
        m[(self.to.index(), self.from.index())] = C64::new(self.amplitude(), 0.0);
        m
    }
}

/// Drive `Ω(t)` between two levels; enters the Hamiltonian as
/// `2π(Ω|upper⟩⟨lower| + Ω*|lower⟩⟨upper|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveTerm {
    pub upper: BasisLabel,
    pub lower: BasisLabel,
    pub envelope: PulseEnvelope,
}

/// Time-dependent Hamiltonian plus collapse operators, all in angular units.
#[derive(Debug, Clone)]
pub struct LindbladSystem {
    dim: usize,
    static_h: Vec<C64>,
    drives: Vec<DriveTerm>,
    collapses: Vec<CollapseOp>,
}

impl LindbladSystem {
    /// `static_h` is the time-independent part of the Hamiltonian in rad/ns.
    pub fn new(
        static_h: DMatrix<C64>,
        drives: Vec<DriveTerm>,
        collapses: Vec<CollapseOp>,
    ) -> Result<Self> {
        let dim = static_h.nrows();
        if static_h.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: static_h.ncols(),
            });
        }
        if static_h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("hamiltonian"));
        }
        let herm = (&static_h - static_h.adjoint()).camax();
        if herm > 1e-12 * (1.0 + static_h.camax()) {
            return Err(Error::NotHermitian(herm));
        }
        for d in &drives {
            for l in [d.upper, d.lower] {
                if l.index() >= dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: l.index() + 1,
                    });
                }
            }
            if d.upper == d.lower {
                return Err(Error::invalid("drive", "a drive must couple two distinct levels"));
            }
        }
        for c in &collapses {
            if c.rate < 0.0 || !c.rate.is_finite() {
                return Err(Error::invalid("collapse rate", format!("{}", c.rate)));
            }
            for l in [c.to, c.from] {
                if l.index() >= dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: l.index() + 1,
                    });
                }
            }
        }
        let mut flat = vec![C64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                flat[i * dim + j] = static_h[(i, j)];
            }
        }
        Ok(Self {
            dim,
            static_h: flat,
            drives,
            collapses,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn collapses(&self) -> &[CollapseOp] {
        &self.collapses
    }

    pub fn drives(&self) -> &[DriveTerm] {
        &self.drives
    }

    /// Writes `H(t)` in row-major order into `out`.
    pub(crate) fn fill_hamiltonian(&self, t: f64, out: &mut [C64]) {
        out.copy_from_slice(&self.static_h);
        let n = self.dim;
        for d in &self.drives {
            let w = d.envelope.eval(t) * TWO_PI;
            let (u, l) = (d.upper.index(), d.lower.index());
            out[u * n + l] += w;
            out[l * n + u] += w.conj();
        }
    }

    pub fn hamiltonian(&self, t: f64) -> DMatrix<C64> {
        let mut flat = vec![C64::new(0.0, 0.0); self.dim * self.dim];
        self.fill_hamiltonian(t, &mut flat);
        DMatrix::from_row_slice(self.dim, self.dim, &flat)
    }

    /// Non-Hermitian no-jump generator `H − (i/2) Σ L†L`.
    pub fn effective_hamiltonian(&self, t: f64) -> DMatrix<C64> {
        let mut h = self.hamiltonian(t);
        for c in &self.collapses {
            let k = c.from.index();
            h[(k, k)] -= C64::new(0.0, 0.5 * c.rate);
        }
        h
    }

    /// Smallest drive sample spacing; used to cap integrator steps so a
    /// short pulse is never stepped over.
    pub fn max_step_hint(&self) -> Option<f64> {
        self.drives
            .iter()
            .filter(|d| !d.envelope.is_zero())
            .filter_map(|d| d.envelope.min_spacing())
            .min_by(|a, b| a.total_cmp(b))
    }

    /// `dρ/dt` on row-major flattened matrices.
    pub(crate) fn derivative_flat(&self, t: f64, rho: &[C64], out: &mut [C64]) {
        let n = self.dim;
        let mut h = [C64::new(0.0, 0.0); 25];
        let h = if n <= 5 {
            &mut h[..n * n]
        } else {
            // Only reachable through hand-built systems larger than the model.
            return self.derivative_flat_large(t, rho, out);
        };
        self.fill_hamiltonian(t, h);
        commutator_dissipator(n, h, &self.collapses, rho, out);
    }

    fn derivative_flat_large(&self, t: f64, rho: &[C64], out: &mut [C64]) {
        let n = self.dim;
        let mut h = vec![C64::new(0.0, 0.0); n * n];
        self.fill_hamiltonian(t, &mut h);
        commutator_dissipator(n, &h, &self.collapses, rho, out);
    }
}

fn commutator_dissipator(
    n: usize,
    h: &[C64],
    collapses: &[CollapseOp],
    rho: &[C64],
    out: &mut [C64],
) {
    let minus_i = C64::new(0.0, -1.0);
    for i in 0..n {
        for j in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..n {
                acc += h[i * n + k] * rho[k * n + j] - rho[i * n + k] * h[k * n + j];
            }
            out[i * n + j] = minus_i * acc;
        }
    }
    for c in collapses {
        if c.rate == 0.0 {
            continue;
        }
        let (a, f) = (c.to.index(), c.from.index());
        let half = 0.5 * c.rate;
        let pop = rho[f * n + f];
        for j in 0..n {
            out[f * n + j] -= half * rho[f * n + j];
        }
        for i in 0..n {
            out[i * n + f] -= half * rho[i * n + f];
        }
        out[a * n + a] += c.rate * pop;
    }
}

fn check_reinit(with_reinit: bool, reinit: Option<&PulseEnvelope>) -> Result<()> {
    match (with_reinit, reinit.is_some()) {
        (true, false) => Err(Error::invalid(
            "reinit_pulse",
            "the five-level model requires a re-initialization pulse",
        )),
        (false, true) => Err(Error::invalid(
            "reinit_pulse",
            "a re-initialization pulse needs the five-level basis",
        )),
        _ => Ok(()),
    }
}

fn static_hamiltonian(params: &CqedParams, dim: usize) -> DMatrix<C64> {
    let mut h = DMatrix::zeros(dim, dim);
    let dp = BasisLabel::DownPrime0.index();
    let d1 = BasisLabel::Down1.index();
    h[(dp, dp)] = C64::new(TWO_PI * params.delta, 0.0);
    h[(d1, d1)] = C64::new(TWO_PI * (params.delta - params.delta_c), 0.0);
    h[(d1, dp)] = C64::new(TWO_PI * params.g, 0.0);
    h[(dp, d1)] = C64::new(TWO_PI * params.g, 0.0);
    h
}

fn drive_terms(pulse: &PulseEnvelope, reinit: Option<&PulseEnvelope>) -> Vec<DriveTerm> {
    let mut drives = vec![DriveTerm {
        upper: BasisLabel::DownPrime0,
        lower: BasisLabel::Up0,
        envelope: pulse.clone(),
    }];
    if let Some(r) = reinit {
        drives.push(DriveTerm {
            upper: BasisLabel::UpPrime0,
            lower: BasisLabel::Down0,
            envelope: r.clone(),
        });
    }
    drives
}

/// Joint atom-cavity Hamiltonian at time `t` in rad/ns.
pub fn build_photon_hamiltonian(
    params: &CqedParams,
    pulse: &PulseEnvelope,
    with_reinit: bool,
    reinit_pulse: Option<&PulseEnvelope>,
    t: f64,
) -> Result<DMatrix<C64>> {
    params.validate()?;
    check_reinit(with_reinit, reinit_pulse)?;
    let dim = if with_reinit { 5 } else { 4 };
    let sys = LindbladSystem::new(
        static_hamiltonian(params, dim),
        drive_terms(pulse, reinit_pulse),
        Vec::new(),
    )?;
    let h = sys.hamiltonian(t);
    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("pulse sample"));
    }
    Ok(h)
}

/// Collapse operators in the order cavity emission, free-space loss, spin
/// relaxation, repump (five-level only), reverse spin relaxation (when
/// symmetric). Zero-rate operators are kept.
pub fn build_collapse_operators(params: &CqedParams, with_reinit: bool) -> Result<Vec<CollapseOp>> {
    params.validate()?;
    use BasisLabel::*;
    let mut ops = vec![
        CollapseOp {
            to: Down0,
            from: Down1,
            rate: TWO_PI * params.kappa_tot(),
            channel: Channel::CavityEmission,
        },
        CollapseOp {
            to: Down0,
            from: DownPrime0,
            rate: TWO_PI * params.gamma,
            channel: Channel::FreeSpace,
        },
        CollapseOp {
            to: Down0,
            from: Up0,
            rate: TWO_PI * params.gamma_t,
            channel: Channel::SpinRelaxation,
        },
    ];
    if with_reinit {
        ops.push(CollapseOp {
            to: Up0,
            from: UpPrime0,
            rate: TWO_PI * params.gamma,
            channel: Channel::Repump,
        });
    }
    if params.spin_relaxation == SpinRelaxation::Symmetric {
        ops.push(CollapseOp {
            to: Up0,
            from: Down0,
            rate: TWO_PI * params.gamma_t,
            channel: Channel::SpinRelaxation,
        });
    }
    Ok(ops)
}

/// Full photon-generation system; five-level when `reinit_pulse` is given.
pub fn photon_system(
    params: &CqedParams,
    pulse: &PulseEnvelope,
    reinit_pulse: Option<&PulseEnvelope>,
) -> Result<LindbladSystem> {
    params.validate()?;
    let with_reinit = reinit_pulse.is_some();
    let dim = if with_reinit { 5 } else { 4 };
    LindbladSystem::new(
        static_hamiltonian(params, dim),
        drive_terms(pulse, reinit_pulse),
        build_collapse_operators(params, with_reinit)?,
    )
}

/// `−i[H,ρ] + Σ (LρL† − ½{L†L, ρ})` at time `t`.
pub fn lindblad_derivative(
    rho: &DensityMatrix,
    system: &LindbladSystem,
    t: f64,
) -> Result<DMatrix<C64>> {
    let n = system.dim();
    if rho.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rho.dim(),
        });
    }
    let flat = rho.to_row_major();
    let mut out = vec![C64::new(0.0, 0.0); n * n];
    system.derivative_flat(t, &flat, &mut out);
    Ok(DMatrix::from_row_slice(n, n, &out))
}

/// `Re tr(ρ O)`; the observable must be Hermitian.
pub fn expectation(rho: &DensityMatrix, observable: &DMatrix<C64>) -> Result<f64> {
    let n = rho.dim();
    if observable.nrows() != n || observable.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: observable.nrows(),
        });
    }
    let herm = (observable - observable.adjoint()).camax();
    if herm > 1e-10 {
        return Err(Error::NotHermitian(herm));
    }
    Ok((rho.matrix() * observable).trace().re)
}

/// Photon emission rate `κ_tot ⟨↓,1|ρ|↓,1⟩` (1/ns).
pub fn photon_flux(rho: &DensityMatrix, params: &CqedParams) -> f64 {
    TWO_PI * params.kappa_tot() * rho.population(BasisLabel::Down1).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::{make_pulse, GaussianSpec, PulseShape};

    #[test]
    fn static_hamiltonian_entries() {
        let mut p = CqedParams::reference();
        p.delta = 0.0;
        let h = build_photon_hamiltonian(&p, &PulseEnvelope::zero(), false, None, 0.0).unwrap();
        let d1 = BasisLabel::Down1.index();
        let dp = BasisLabel::DownPrime0.index();
        assert!((h[(d1, d1)].re + TWO_PI * 19.88).abs() < 1e-12);
        assert!((h[(d1, dp)].re - TWO_PI * 6.81).abs() < 1e-12);
        assert_eq!(h[(dp, dp)], C64::new(0.0, 0.0));
        let mut nonzero = 0;
        for z in h.iter() {
            if z.norm() > 0.0 {
                nonzero += 1;
            }
        }
        assert_eq!(nonzero, 3);
    }

    #[test]
    fn zero_params_give_zero_matrix() {
        let h = build_photon_hamiltonian(
            &CqedParams::zero(),
            &PulseEnvelope::zero(),
            false,
            None,
            3.0,
        )
        .unwrap();
        assert_eq!(h.camax(), 0.0);
    }

    #[test]
    fn drive_peak_entry() {
        let pulse = make_pulse(&PulseShape::Gaussian(GaussianSpec::new(0.194, 50.0, 15.0))).unwrap();
        let h = build_photon_hamiltonian(&CqedParams::reference(), &pulse, false, None, 50.0).unwrap();
        let e = h[(BasisLabel::DownPrime0.index(), BasisLabel::Up0.index())];
        assert!((e.norm() - TWO_PI * 0.194).abs() < 1e-12);
        assert_eq!(h[(0, 1)], e.conj());
    }

    #[test]
    fn reinit_flag_must_match_pulse() {
        let p = CqedParams::reference();
        let z = PulseEnvelope::zero();
        assert!(build_photon_hamiltonian(&p, &z, true, None, 0.0).is_err());
        assert!(build_photon_hamiltonian(&p, &z, false, Some(&z), 0.0).is_err());
        let h = build_photon_hamiltonian(&p, &z, true, Some(&z), 0.0).unwrap();
        assert_eq!(h.nrows(), 5);
    }

    #[test]
    fn collapse_amplitudes() {
        let p = CqedParams::reference();
        let ops = build_collapse_operators(&p, true).unwrap();
        assert!((ops[0].amplitude() - (TWO_PI * 329.0).sqrt()).abs() < 1e-12);
        assert_eq!(ops[0].channel, Channel::CavityEmission);
        assert!((ops[3].amplitude() - (TWO_PI * 0.1).sqrt()).abs() < 1e-12);
        assert_eq!(ops[3].to, BasisLabel::Up0);
        let mut z = p;
        z.gamma_t = 0.0;
        let ops = build_collapse_operators(&z, false).unwrap();
        assert_eq!(ops[2].matrix(4).camax(), 0.0);
        for op in &ops {
            let m = op.matrix(4);
            assert!(m.iter().filter(|z| z.norm() > 0.0).count() <= 1);
        }
    }

    #[test]
    fn down_only_relaxation_has_no_reverse_channel() {
        let mut p = CqedParams::reference();
        p.spin_relaxation = SpinRelaxation::DownOnly;
        assert_eq!(build_collapse_operators(&p, false).unwrap().len(), 3);
        assert_eq!(build_collapse_operators(&p, true).unwrap().len(), 4);
    }

    #[test]
    fn negative_rate_errors() {
        let mut p = CqedParams::reference();
        p.kappa_s = -1.0;
        assert!(build_collapse_operators(&p, false).is_err());
    }

    #[test]
    fn one_hot_cavity_decay() {
        let p = CqedParams::reference();
        let sys = photon_system(&p, &PulseEnvelope::zero(), None).unwrap();
        let rho = DensityMatrix::pure(BasisLabel::Down1, 4).unwrap();
        let d = lindblad_derivative(&rho, &sys, 0.0).unwrap();
        let k = BasisLabel::Down1.index();
        assert!((d[(k, k)].re + TWO_PI * 329.0).abs() < 1e-9);
        assert!(d.trace().norm() < 1e-12);
    }

    #[test]
    fn zero_generator() {
        let sys = photon_system(&CqedParams::zero(), &PulseEnvelope::zero(), None).unwrap();
        let rho = DensityMatrix::pure(BasisLabel::Up0, 4).unwrap();
        assert_eq!(lindblad_derivative(&rho, &sys, 1.0).unwrap().camax(), 0.0);
    }

    #[test]
    fn expectation_rejects_non_hermitian() {
        let rho = DensityMatrix::pure(BasisLabel::Up0, 4).unwrap();
        let mut o = DMatrix::<C64>::identity(4, 4);
        assert!((expectation(&rho, &o).unwrap() - 1.0).abs() < 1e-15);
        o[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(expectation(&rho, &o), Err(Error::NotHermitian(_))));
    }
}
