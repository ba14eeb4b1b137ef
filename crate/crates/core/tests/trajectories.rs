use sivsim_core::dynamics::{evolve, photon_system, BasisLabel, CqedParams, DensityMatrix, TimeGrid};
use sivsim_core::pulse::{make_pulse, simulate_photon, GaussianSpec, PulseShape};
use sivsim_core::trajectories::{
    g2_histogram, g2_zero, gamma_t_sweep, run_trajectories, run_trajectories_with_populations,
    ClickChannel, ClickRecord, ClickStream, PulseRole, StreamMeta, TrajectoryConfig,
};
use sivsim_core::Error;

fn no_relax() -> CqedParams {
    let mut p = CqedParams::reference();
    p.gamma_t = 0.0;
    p
}

#[test]
fn without_relaxation_each_pulse_emits_at_most_once() {
    let mut cfg = TrajectoryConfig::reference(10_000, 11);
    cfg.repetitions = 1;
    let stream = run_trajectories(&no_relax(), &cfg).unwrap();
    for traj in stream.by_trajectory() {
        let n = traj.iter().filter(|r| r.channel == ClickChannel::Emission).count();
        assert!(n <= 1);
    }
}

#[test]
fn mean_emission_matches_master_equation() {
    let p = no_relax();
    let mut cfg = TrajectoryConfig::reference(4000, 5);
    cfg.repetitions = 1;
    let stream = run_trajectories(&p, &cfg).unwrap();
    let gen = &cfg.pulse_sequence[0].envelope;
    let grid = TimeGrid::new(0.0, 150.0, 1501).unwrap();
    let expected = simulate_photon(&p, gen, &grid).unwrap().total_probability();
    let mean = stream.mean_emissions_per_pulse();
    let sigma = (expected * (1.0 - expected) / 4000.0).sqrt();
    assert!((mean - expected).abs() < 3.0 * sigma, "{mean} vs {expected} ± {sigma}");
}

#[test]
fn emissions_cluster_at_generation_pulses() {
    // Two generation pulses per period, each followed by re-initialization.
    let g = |mu| make_pulse(&PulseShape::Gaussian(GaussianSpec::new(0.194, mu, 10.0))).unwrap();
    let r = |mu| make_pulse(&PulseShape::Gaussian(GaussianSpec::new(0.5, mu, 6.0))).unwrap();
    let mut cfg = TrajectoryConfig::reference(500, 3);
    cfg.repetitions = 1;
    cfg.pulse_sequence = vec![
        sivsim_core::trajectories::SequencePulse { envelope: g(30.0), role: PulseRole::Generate },
        sivsim_core::trajectories::SequencePulse { envelope: r(65.0), role: PulseRole::Reinitialize },
        sivsim_core::trajectories::SequencePulse { envelope: g(105.0), role: PulseRole::Generate },
        sivsim_core::trajectories::SequencePulse { envelope: r(135.0), role: PulseRole::Reinitialize },
    ];
    let stream = run_trajectories(&no_relax(), &cfg).unwrap();
    let em: Vec<&ClickRecord> = stream.emissions().collect();
    let near = |c: f64| em.iter().filter(|r| (r.t_ns - c).abs() < 30.0).count();
    let (first, second) = (near(30.0), near(105.0));
    assert!(first > 300 && second > 300, "{first} {second}");
    assert!(first + second + 5 >= em.len());
    assert!(em.iter().all(|r| (r.pulse == 0) == (r.t_ns < 67.5)));
}

#[test]
fn identical_inputs_give_identical_streams() {
    let mut p = CqedParams::reference();
    p.gamma_t = 0.005;
    let cfg = TrajectoryConfig::reference(200, 99);
    let a = run_trajectories(&p, &cfg).unwrap();
    let b = run_trajectories(&p, &cfg).unwrap();
    let (mut ba, mut bb) = (Vec::new(), Vec::new());
    a.write_records(&mut ba).unwrap();
    b.write_records(&mut bb).unwrap();
    assert_eq!(ba, bb);
    let mut cfg2 = cfg.clone();
    cfg2.seed = 100;
    assert_ne!(run_trajectories(&p, &cfg2).unwrap().records, a.records);
}

#[test]
fn trajectory_average_matches_master_equation() {
    let mut p = CqedParams::reference();
    p.gamma_t = 0.002;
    let n = 4000;
    let mut cfg = TrajectoryConfig::reference(n, 2024);
    cfg.repetitions = 1;
    let checkpoints: Vec<f64> = (1..=10).map(|k| 15.0 * k as f64).collect();
    let (_, pops) = run_trajectories_with_populations(&p, &cfg, &checkpoints).unwrap();
    let sys = photon_system(
        &p,
        &cfg.pulse_sequence[0].envelope,
        Some(&cfg.pulse_sequence[1].envelope),
    )
    .unwrap();
    let rho0 = DensityMatrix::pure(BasisLabel::Up0, 5).unwrap();
    let tol = 4.0 / (n as f64).sqrt();
    for (t, mc) in pops.times.iter().zip(&pops.mean) {
        let grid = TimeGrid::new(0.0, *t, 2).unwrap();
        let rho = &evolve(&sys, &rho0, &grid).unwrap()[1].1;
        for (i, &m) in mc.iter().enumerate() {
            let me = rho.matrix()[(i, i)].re;
            assert!((m - me).abs() < tol, "t={t} level {i}: {m} vs {me}");
        }
    }
}

fn meta(n_traj: usize, pulses: usize, spacing: f64) -> StreamMeta {
    StreamMeta {
        n_trajectories: n_traj,
        pulses_per_trajectory: pulses,
        pulse_spacing_ns: spacing,
        seed: None,
        config: serde_json::Value::Null,
    }
}

fn record(traj: usize, pulse: usize, t: f64) -> ClickRecord {
    ClickRecord {
        traj: traj as u32,
        pulse: pulse as u32,
        t_ns: t,
        channel: ClickChannel::Emission,
        freq: None,
    }
}

#[test]
fn one_click_per_pulse_gives_unit_side_peaks() {
    let pulses = 20;
    let records = (0..pulses).map(|k| record(0, k, 10.0 * k as f64 + 1.0)).collect();
    let s = ClickStream::new(meta(1, pulses, 10.0), records).unwrap();
    let h = g2_histogram(&s, 1.0, 60.0).unwrap();
    assert_eq!(g2_zero(&h, 10.0).unwrap(), 0.0);
    for (lag, area) in h.side_peak_areas(10.0) {
        assert!((area / h.normalization - 1.0).abs() < 1e-12, "lag {lag}");
    }
}

#[test]
fn alternating_stream_gives_comb() {
    let pulses = 40;
    let records = (0..pulses)
        .filter(|k| k % 2 == 0)
        .map(|k| record(0, k, 10.0 * k as f64))
        .collect();
    let s = ClickStream::new(meta(1, pulses, 10.0), records).unwrap();
    let h = g2_histogram(&s, 1.0, 60.0).unwrap();
    for (t, c) in &h.bins {
        let k = (t / 10.0).round() as i64;
        let on_comb = (t - 10.0 * k as f64).abs() < 1e-9 && k % 2 == 0 && k != 0;
        assert_eq!(*c > 0.0, on_comb, "τ={t}");
    }
    // Hand count: 20 clicks; pairs at lag 2m number 20 − m per order.
    let at = |tau: f64| h.bins.iter().find(|b| (b.0 - tau).abs() < 1e-9).unwrap().1;
    assert_eq!(at(20.0), 19.0);
    assert_eq!(at(-40.0), 18.0);
}

#[test]
fn poisson_surrogate_gives_unity() {
    use rand::SeedableRng;
    use rand_distr::{Distribution, Poisson};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let dist = Poisson::new(0.3).unwrap();
    let (n_traj, pulses) = (10_000, 10);
    let mut records = Vec::new();
    for traj in 0..n_traj {
        for k in 0..pulses {
            let n: f64 = dist.sample(&mut rng);
            for j in 0..n as usize {
                records.push(record(traj, k, 10.0 * k as f64 + 0.1 * j as f64));
            }
        }
    }
    let s = ClickStream::new(meta(n_traj, pulses, 10.0), records).unwrap();
    let h = g2_histogram(&s, 0.5, 60.0).unwrap();
    let g2 = g2_zero(&h, 10.0).unwrap();
    assert!((g2 - 1.0).abs() < 0.05, "{g2}");
}

#[test]
fn histogram_is_symmetric_and_errors_are_reported() {
    let mut p = CqedParams::reference();
    p.gamma_t = 0.01;
    let s = run_trajectories(&p, &TrajectoryConfig::reference(300, 4)).unwrap();
    let h = g2_histogram(&s, 0.7, 700.0).unwrap();
    let n = h.bins.len();
    for i in 0..n {
        assert_eq!(h.bins[i].1, h.bins[n - 1 - i].1);
    }
    let empty = ClickStream::new(meta(1, 3, 10.0), vec![]).unwrap();
    assert!(matches!(g2_histogram(&empty, 1.0, 10.0), Err(Error::EmptyInput(_))));
    let single = ClickStream::new(meta(1, 1, 10.0), vec![record(0, 0, 1.0)]).unwrap();
    let h = g2_histogram(&single, 1.0, 30.0).unwrap();
    assert!(matches!(g2_zero(&h, 10.0), Err(Error::NoSidePeaks)));
}

#[test]
fn sweep_is_monotone_with_secondary_peaks() {
    let cfg = TrajectoryConfig::reference(1500, 77);
    let values = [0.0, 5e-4, 5e-3];
    let t = std::time::Instant::now();
    let pts = gamma_t_sweep(&CqedParams::reference(), &values, &cfg, 1.0).unwrap();
    eprintln!("sweep in {:.1?}", t.elapsed());
    assert!(pts[0].g2_zero < 1e-3);
    for w in pts.windows(2) {
        eprintln!("{} {} ± {}", w[1].gamma_t, w[1].g2_zero, w[1].g2_sigma);
        let sigma = (w[0].g2_sigma.powi(2) + w[1].g2_sigma.powi(2)).sqrt();
        assert!(w[1].g2_zero >= w[0].g2_zero - 2.0 * sigma);
    }
    for pt in &pts {
        let side = pt.histogram.side_peak_areas(150.0);
        assert!(side.iter().any(|(k, a)| *k == 1 && *a > 0.0));
    }
    assert!(gamma_t_sweep(&CqedParams::reference(), &[1.0, 0.0], &cfg, 1.0).is_err());
}
