use nalgebra::DMatrix;
use proptest::prelude::*;
use sivsim_core::dynamics::{
    build_collapse_operators, evolve, expectation, lindblad_derivative, photon_flux,
    photon_system, BasisLabel, CqedParams, DensityMatrix, LindbladSystem, TimeGrid, TWO_PI,
};
use sivsim_core::pulse::{make_pulse, GaussianSpec, PulseEnvelope, PulseShape};
use sivsim_core::C64;

fn constant_drive(omega: f64, t_end: f64) -> PulseEnvelope {
    PulseEnvelope::tabulated_real(vec![-1.0, t_end + 1.0], &[omega, omega]).unwrap()
}

fn check_state(rho: &DensityMatrix) {
    assert!((rho.trace() - 1.0).abs() < 1e-9, "trace {}", rho.trace());
    assert!(rho.hermiticity_error() < 1e-10);
    assert!(rho.min_eigenvalue() > -1e-9, "eigenvalue {}", rho.min_eigenvalue());
}

#[test]
fn two_level_rabi_oscillation() {
    // Rabi frequency Ω_R; the matrix element is Ω_R/2.
    let omega_r = 0.25;
    let sys = photon_system(&CqedParams::zero(), &constant_drive(omega_r / 2.0, 20.0), None).unwrap();
    let rho0 = DensityMatrix::pure(BasisLabel::Up0, 4).unwrap();
    let grid = TimeGrid::new(0.0, 20.0, 81).unwrap();
    for (t, rho) in evolve(&sys, &rho0, &grid).unwrap() {
        let expected = (TWO_PI * omega_r * t / 2.0).sin().powi(2);
        assert!(
            (rho.population(BasisLabel::DownPrime0) - expected).abs() < 1e-6,
            "t={t}"
        );
        check_state(&rho);
    }
}

#[test]
fn dark_state_is_stationary() {
    let mut p = CqedParams::reference();
    p.gamma_t = 0.0;
    let sys = photon_system(&p, &PulseEnvelope::zero(), None).unwrap();
    let rho0 = DensityMatrix::pure(BasisLabel::Up0, 4).unwrap();
    let grid = TimeGrid::new(0.0, 50.0, 11).unwrap();
    for (_, rho) in evolve(&sys, &rho0, &grid).unwrap() {
        assert!((rho.matrix() - rho0.matrix()).camax() < 1e-14);
    }
}

fn reference_gaussian() -> PulseEnvelope {
    make_pulse(&PulseShape::Gaussian(GaussianSpec::new(0.194, 60.0, 15.0))).unwrap()
}

#[test]
fn reference_gaussian_transfers_population_and_emits_p_c() {
    let mut p = CqedParams::reference();
    p.gamma_t = 0.0;
    let sys = photon_system(&p, &reference_gaussian(), None).unwrap();
    let rho0 = DensityMatrix::pure(BasisLabel::Up0, 4).unwrap();
    let grid = TimeGrid::new(0.0, 150.0, 1501).unwrap();
    let traj = evolve(&sys, &rho0, &grid).unwrap();
    let last = &traj.last().unwrap().1;
    assert!(last.population(BasisLabel::Down0) > 0.95);
    let mut area = 0.0;
    for w in traj.windows(2) {
        let dt = w[1].0 - w[0].0;
        area += 0.5 * dt * (photon_flux(&w[0].1, &p) + photon_flux(&w[1].1, &p));
    }
    let p_c = p.cavity_branching();
    assert!(area > 0.0 && area <= 1.0);
    assert!((area - p_c).abs() < 0.05 * p_c, "area {area} vs p_c {p_c}");
    for (_, rho) in &traj {
        check_state(rho);
        let total: f64 = BasisLabel::labels(4)
            .iter()
            .map(|&b| {
                let mut o = DMatrix::zeros(4, 4);
                o[(b.index(), b.index())] = C64::new(1.0, 0.0);
                expectation(rho, &o).unwrap()
            })
            .sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
}

#[test]
fn purcell_broadened_decay() {
    let mut p = CqedParams::reference();
    p.delta_c = 0.0;
    p.gamma_t = 0.0;
    let sys = photon_system(&p, &PulseEnvelope::zero(), None).unwrap();
    let rho0 = DensityMatrix::pure(BasisLabel::DownPrime0, 4).unwrap();
    let grid = TimeGrid::new(0.0, 2.0, 41).unwrap();
    let traj = evolve(&sys, &rho0, &grid).unwrap();
    // Log-linear fit on the tail, past the fast cavity transient.
    let pts: Vec<(f64, f64)> = traj
        .iter()
        .filter(|(t, _)| *t >= 0.2)
        .map(|(t, r)| (*t, r.population(BasisLabel::DownPrime0).ln()))
        .collect();
    let n = pts.len() as f64;
    let xm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = pts.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - xm).powi(2)).sum::<f64>();
    let expected = TWO_PI * p.purcell_linewidth();
    assert!((-slope - expected).abs() < 0.05 * expected, "{} vs {expected}", -slope);
}

/// Row-major vectorization: vec(AρB) = (A ⊗ Bᵀ) vec(ρ).
fn superoperator(sys: &LindbladSystem, t: f64) -> DMatrix<C64> {
    let n = sys.dim();
    let h = sys.hamiltonian(t);
    let id = DMatrix::<C64>::identity(n, n);
    let mi = C64::new(0.0, -1.0);
    let mut s = (h.kronecker(&id) - id.kronecker(&h.transpose())) * mi;
    for c in sys.collapses() {
        let l = c.matrix(n);
        let ldl = l.adjoint() * &l;
        s += l.kronecker(&l.map(|z| z.conj()));
        s -= ldl.kronecker(&id) * C64::new(0.5, 0.0);
        s -= id.kronecker(&ldl.transpose()) * C64::new(0.5, 0.0);
    }
    s
}

#[test]
fn matches_superoperator_exponential() {
    let p = CqedParams {
        g: 0.8,
        kappa_w: 0.6,
        kappa_s: 0.3,
        gamma: 0.2,
        gamma_t: 0.05,
        delta: 0.15,
        delta_c: 0.4,
        ..CqedParams::reference()
    };
    let reinit = constant_drive(0.12, 10.0);
    let sys = photon_system(&p, &constant_drive(0.3, 10.0), Some(&reinit)).unwrap();
    let rho0 = DensityMatrix::pure(BasisLabel::Up0, 5).unwrap();
    let grid = TimeGrid::new(0.0, 10.0, 2)
        .unwrap()
        .with_tolerance(1e-10, 1e-12);
    let rho = &evolve(&sys, &rho0, &grid).unwrap()[1].1;
    let s = superoperator(&sys, 0.0) * C64::new(10.0, 0.0);
    let prop = s.exp();
    let mut v = DMatrix::<C64>::zeros(25, 1);
    v[(0, 0)] = C64::new(1.0, 0.0);
    let out = prop * v;
    for i in 0..5 {
        for j in 0..5 {
            let d = (rho.matrix()[(i, j)] - out[(i * 5 + j, 0)]).norm();
            assert!(d < 1e-6, "entry ({i},{j}) differs by {d}");
        }
    }
}

#[test]
fn flux_is_zero_without_cavity_population() {
    let rho = DensityMatrix::pure(BasisLabel::Up0, 4).unwrap();
    assert_eq!(photon_flux(&rho, &CqedParams::reference()), 0.0);
}

#[test]
fn dimension_mismatch_is_reported() {
    let sys = photon_system(&CqedParams::reference(), &PulseEnvelope::zero(), None).unwrap();
    let rho = DensityMatrix::pure(BasisLabel::Up0, 5).unwrap();
    assert!(lindblad_derivative(&rho, &sys, 0.0).is_err());
    let grid = TimeGrid::new(0.0, 1.0, 2).unwrap();
    assert!(evolve(&sys, &rho, &grid).is_err());
    assert!(TimeGrid::new(1.0, 1.0, 2).is_err());
    assert!(TimeGrid::new(0.0, 1.0, 1).is_err());
}

#[test]
fn collapse_operators_are_single_entry() {
    for with_reinit in [false, true] {
        let dim = if with_reinit { 5 } else { 4 };
        for op in build_collapse_operators(&CqedParams::reference(), with_reinit).unwrap() {
            let m = op.matrix(dim);
            assert_eq!(m.iter().filter(|z| z.norm() > 0.0).count(), 1);
        }
    }
}

fn random_hermitian(dim: usize, entries: &[f64]) -> DensityMatrix {
    // Random positive matrix A A†, normalized.
    let a = DMatrix::from_fn(dim, dim, |i, j| {
        C64::new(entries[2 * (i * dim + j)], entries[2 * (i * dim + j) + 1])
    });
    let m = &a * a.adjoint();
    let tr = m.trace();
    DensityMatrix::from_matrix(m / tr).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generator_is_traceless(
        entries in prop::collection::vec(-1.0f64..1.0, 50),
        omega in 0.0f64..0.5,
        omega_re in 0.0f64..0.5,
        t in 0.0f64..10.0,
        delta in -2.0f64..2.0,
    ) {
        let mut p = CqedParams::reference();
        p.delta = delta;
        let reinit = constant_drive(omega_re, 10.0);
        let sys = photon_system(&p, &constant_drive(omega, 10.0), Some(&reinit)).unwrap();
        let rho = random_hermitian(5, &entries);
        let d = lindblad_derivative(&rho, &sys, t).unwrap();
        prop_assert!(d.trace().norm() < 1e-12 * (1.0 + d.camax()));
        prop_assert!((&d - d.adjoint()).camax() < 1e-9);
    }

    #[test]
    fn hamiltonian_is_hermitian(omega in -1.0f64..1.0, phase in 0.0f64..6.3, t in -5.0f64..15.0) {
        let drive = PulseEnvelope::tabulated(
            vec![0.0, 10.0],
            vec![C64::from_polar(omega, phase); 2],
        ).unwrap();
        let sys = photon_system(&CqedParams::reference(), &drive, Some(&drive)).unwrap();
        let h = sys.hamiltonian(t);
        prop_assert!((&h - h.adjoint()).camax() == 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn evolution_preserves_state_invariants(
        omega in 0.0f64..0.4,
        sigma in 3.0f64..20.0,
        gamma_t in 0.0f64..0.01,
    ) {
        let mut p = CqedParams::reference();
        p.gamma_t = gamma_t;
        let pulse = make_pulse(&PulseShape::Gaussian(GaussianSpec::new(omega, 30.0, sigma))).unwrap();
        let sys = photon_system(&p, &pulse, None).unwrap();
        let rho0 = DensityMatrix::pure(BasisLabel::Up0, 4).unwrap();
        let grid = TimeGrid::new(0.0, 60.0, 31).unwrap();
        for (_, rho) in evolve(&sys, &rho0, &grid).unwrap() {
            prop_assert!((rho.trace() - 1.0).abs() < 1e-9);
            prop_assert!(rho.hermiticity_error() < 1e-10);
            prop_assert!(rho.min_eigenvalue() > -1e-9);
        }
    }
}
