use proptest::prelude::*;
use sivsim_core::stats::{
    consecutive_label_ratio, count_streams, count_streams_modulated, duty_cycle,
    expected_label_ratio, expected_maximal_runs, fit_exponential_decay, fit_stream_efficiency,
    hyperfine_scan, label_autocorrelation, markov_decay_constant, nuclear_correlations,
    simulate_nuclear_chain, synthetic_decay_curve, thermal_estimates, wcs_gain, wcs_monte_carlo,
    DecayModel, HyperfineScan, LossBudget, NuclearChainConfig, OuModulation, StreamStats,
    ThermalInputs, Weights,
};
use sivsim_core::trajectories::{ClickChannel, ClickRecord, ClickStream, StreamMeta};

#[test]
fn loss_budget_interval() {
    let (lo, hi) = LossBudget::reference().product().unwrap();
    assert!((lo - 0.13).abs() <= 0.01 && (hi - 0.22).abs() <= 0.01, "{lo} {hi}");
    let ones = LossBudget {
        initialization: (1.0, 1.0),
        siv_to_waveguide: (1.0, 1.0),
        fiber_coupling: (1.0, 1.0),
        filter_setup: (1.0, 1.0),
        fiber_network: (1.0, 1.0),
        detector: (1.0, 1.0),
    };
    assert_eq!(ones.product().unwrap(), (1.0, 1.0));
    let half = LossBudget {
        detector: (0.5, 0.5),
        ..ones
    };
    assert_eq!(half.product().unwrap(), (0.5, 0.5));
    let bad = LossBudget {
        detector: (0.0, 0.9),
        ..ones
    };
    assert!(bad.product().is_err());
}

#[test]
fn duty_cycle_and_gain() {
    let d = duty_cycle(405.0, 0.135, 31.0).unwrap();
    assert!((d - 0.57).abs() < 0.005);
    let g = wcs_gain(0.57, 0.0168).unwrap().value();
    assert!((33.0..=36.0).contains(&g), "{g}");
}

#[test]
fn coherent_source_comparison_by_sampling() {
    let mc = wcs_monte_carlo(0.135, 0.0168, 0.57, 2_000_000_000, 4).unwrap();
    let diff = (mc.infidelity_sps - mc.infidelity_wcs).abs();
    let sigma = mc.infidelity_sps_sigma.hypot(mc.infidelity_wcs_sigma);
    assert!(diff < 3.0 * sigma, "{mc:?}");
    let gain = 0.57 / 0.0168;
    assert!((mc.rate_ratio / gain - 1.0).abs() < 0.05, "{} vs {gain}", mc.rate_ratio);
}

#[test]
fn run_histogram_matches_closed_form() {
    for (eta, seed) in [(0.05, 1), (0.149, 2), (0.5, 3)] {
        let attempts = 10_000_000;
        let s = count_streams(eta, attempts, seed).unwrap();
        for n in 1..=s.n_max() {
            let e = expected_maximal_runs(eta, attempts, n);
            if e < 5.0 {
                continue;
            }
            let o = s.count(n) as f64;
            assert!((o - e).abs() < 3.0 * e.sqrt(), "eta {eta} n {n}: {o} vs {e}");
        }
    }
}

#[test]
fn efficiency_fit_and_long_run_extrapolation() {
    let s = count_streams(0.149, 100_000_000, 9).unwrap();
    let fit = fit_stream_efficiency(&s, 30).unwrap();
    assert!((fit.value / 0.149 - 1.0).abs() < 0.01, "{fit:?}");
    let eta = fit.value;
    let scaled = 2.0e10 * eta.powi(11) * (1.0 - eta).powi(2);
    assert!(scaled > 28.0 / 3.0 && scaled < 28.0 * 3.0, "{scaled}");
}

#[test]
fn stream_counting_is_deterministic_and_edge_exact() {
    let a = count_streams(0.3, 3_000_000, 5).unwrap();
    let b = count_streams(0.3, 3_000_000, 5).unwrap();
    assert_eq!(a, b);
    let total: u64 = (1..=a.n_max()).map(|n| n as u64 * a.count(n)).sum();
    assert_eq!(total, a.successes);
}

#[test]
fn fluctuating_efficiency_inflates_the_fit() {
    let m = OuModulation {
        relative_sigma: 0.3,
        correlation_attempts: 200.0,
    };
    let s = count_streams_modulated(0.135, 20_000_000, m, 1).unwrap();
    let fit = fit_stream_efficiency(&s, 12).unwrap();
    assert!(fit.value > s.ratio_efficiency() * 1.03, "{} vs {}", fit.value, s.ratio_efficiency());
}

#[test]
fn click_stream_ingestion() {
    let meta = StreamMeta {
        n_trajectories: 2,
        pulses_per_trajectory: 5,
        pulse_spacing_ns: 150.0,
        seed: None,
        config: serde_json::Value::Null,
    };
    let rec = |traj, pulse| ClickRecord {
        traj,
        pulse,
        t_ns: 50.0 + 150.0 * pulse as f64,
        channel: ClickChannel::Emission,
        freq: None,
    };
    // trajectory 0: 1 1 0 1 1; trajectory 1: 1 1 1 1 1
    let mut records = vec![rec(0, 0), rec(0, 1), rec(0, 3), rec(0, 4)];
    records.extend((0..5).map(|p| rec(1, p)));
    let stream = ClickStream::new(meta, records).unwrap();
    let s = StreamStats::from_click_stream(&stream).unwrap();
    assert_eq!(s.attempts, 10);
    assert_eq!(s.count(2), 2);
    assert_eq!(s.count(5), 1);
    assert_eq!(s.count(4), 0);
}

#[test]
fn lifetime_fit_round_trip() {
    let times: Vec<f64> = (0..40).map(|k| 10.0 * k as f64).collect();
    let ys = synthetic_decay_curve(&times, 1.0, 100.0, 0.05, 3);
    let f = fit_exponential_decay(&times, &ys, DecayModel::Exponential, Weights::Uniform).unwrap();
    assert!((f.value / 100.0 - 1.0).abs() < 0.05, "{f:?}");
    let exact: Vec<f64> = (1..=12).map(|n| 0.149f64.powi(n)).collect();
    let xs: Vec<f64> = (1..=12).map(f64::from).collect();
    let f = fit_exponential_decay(&xs, &exact, DecayModel::Geometric, Weights::Poisson).unwrap();
    assert!((f.value - 0.149).abs() < 1e-6);
}

#[test]
fn nuclear_decay_constant_follows_the_markov_chain() {
    for (p, seed) in [(0.005, 1), (0.009, 2), (0.02, 3)] {
        let s = simulate_nuclear_chain(&NuclearChainConfig::new(p, 1_000_000, seed), 1.0, 0.0).unwrap();
        let c = nuclear_correlations(&s, 600).unwrap();
        let want = markov_decay_constant(p);
        assert!((c.bunching.value / want - 1.0).abs() < 0.05, "p {p}: {:?} vs {want}", c.bunching);
        assert!((c.antibunching.value / c.bunching.value - 1.0).abs() < 0.1);
        assert!((c.p_flip_markov / p - 1.0).abs() < 0.05);
        assert!(c.p_flip_inverse > 1.9 * p);
    }
}

#[test]
fn memoryless_and_frozen_limits() {
    let s = simulate_nuclear_chain(&NuclearChainConfig::new(0.5, 200_000, 4), 1.0, 0.0).unwrap();
    let (m, sd) = label_autocorrelation(&s, 1).unwrap();
    assert!(m.abs() < 3.0 * sd, "{m} ± {sd}");

    let cfg = NuclearChainConfig {
        initial: None,
        chains: 200,
        ..NuclearChainConfig::new(0.0, 2000, 4)
    };
    let s = simulate_nuclear_chain(&cfg, 1.0, 0.0).unwrap();
    let c = nuclear_correlations(&s, 50).unwrap();
    assert!(c.g_down_down.iter().all(|g| (g - c.g_down_down[0]).abs() < 1e-9));
    assert!(c.g_down_down[0] > 1.5);
    assert!(c.bunching.value.is_infinite() || c.bunching.value > 1e4, "{:?}", c.bunching);
}

#[test]
fn label_ratio_with_and_without_leakage() {
    let s = simulate_nuclear_chain(&NuclearChainConfig::new(0.009, 1_000_000, 5), 1.0, 0.0).unwrap();
    let r = consecutive_label_ratio(&s).unwrap();
    assert!((r / expected_label_ratio(0.009, 0.0) - 1.0).abs() < 0.1, "{r}");
    let s = simulate_nuclear_chain(&NuclearChainConfig::new(0.009, 1_000_000, 6), 1.0, 0.06).unwrap();
    let r = consecutive_label_ratio(&s).unwrap();
    assert!((r / expected_label_ratio(0.009, 0.06) - 1.0).abs() < 0.03, "{r}");
}

#[test]
fn hyperfine_and_thermal() {
    let h = hyperfine_scan(&HyperfineScan::default()).unwrap();
    assert!((h.peak_separation().unwrap() - 52.0).abs() <= 1.0);
    let t = thermal_estimates(&ThermalInputs::one_kelvin()).unwrap();
    assert!((0.09..=0.12).contains(&t.upper_branch_population));
    assert!((t.population_decay_loss - 0.02).abs() <= 0.005);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn shrinking_a_factor_shrinks_the_interval(lo in 0.1..0.9f64, w in 0.0..0.1f64, cut in 0.0..1.0f64) {
        let mut b = LossBudget::reference();
        b.filter_setup = (lo, lo + w);
        let (a0, a1) = b.product().unwrap();
        b.filter_setup = (lo + cut * w * 0.5, lo + w - cut * w * 0.5);
        let (b0, b1) = b.product().unwrap();
        prop_assert!(b0 >= a0 - 1e-15 && b1 <= a1 + 1e-15);
    }

    #[test]
    fn run_lengths_account_for_every_success(eta in 0.0..1.0f64, attempts in 1u64..5000, seed in any::<u64>()) {
        let s = count_streams(eta, attempts, seed).unwrap();
        let total: u64 = (1..=s.n_max()).map(|n| n as u64 * s.count(n)).sum();
        prop_assert_eq!(total, s.successes);
        prop_assert!(s.successes <= s.attempts);
    }
}
