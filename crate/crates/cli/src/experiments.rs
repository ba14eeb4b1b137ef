//! The experiment catalog. Each entry reads its sections of the config,
//! runs the library pipeline and records CSV outputs and headline numbers.

use anyhow::{bail, Result};
use sivsim_core::cavity::quasipotential::{
    height_scan, matched_kappa_comparison, pareto_front, symmetric_height_scan, CavityTemplate,
    ScanPoint,
};
use sivsim_core::cavity::{
    classify_coupling, cooperativity, design_fitness, fit_cqed_params, optimal_waveguide_rate,
    source_efficiency, synthetic_spectrum, FitOptions, FitParams, QuasipotentialModel, SpectrumGrid,
};
use sivsim_core::dynamics::{CqedParams, SpinRelaxation, TimeGrid};
use sivsim_core::pulse::{
    invert_target_shape, make_pulse, simulate_photon, verify_adiabaticity, GaussianSpec,
    InversionOptions, Normalization, PulseShape, TargetFamily,
};
use sivsim_core::stats::{
    consecutive_label_ratio, count_streams, count_streams_modulated, duty_cycle,
    expected_label_ratio, expected_maximal_runs, fit_exponential_decay, fit_stream_efficiency,
    hyperfine_scan, leakage_for_ratio, markov_decay_constant, nuclear_correlations,
    simulate_nuclear_chain, synthetic_decay_curve, thermal_estimates, wcs_gain, wcs_monte_carlo,
    DecayModel, DowntimeDecomposition, HyperfineScan, LossBudget, NuclearChainConfig,
    OuModulation, ThermalInputs, Weights,
};
use sivsim_core::trajectories::{
    g2_histogram, g2_zero_with_error, gamma_t_sweep, run_trajectories, PulseRole, SequencePulse,
    TrajectoryConfig,
};

use crate::config::Config;
use crate::output::RunWriter;

pub struct Ctx<'a> {
    pub cfg: &'a Config,
    pub seed: u64,
    pub out: &'a mut RunWriter,
}

pub struct Experiment {
    pub name: &'static str,
    pub about: &'static str,
    /// Requires `--seed`.
    pub stochastic: bool,
    /// Config sections recorded in the manifest.
    pub sections: &'static [&'static str],
    pub run: fn(&mut Ctx) -> Result<()>,
}

pub const CATALOG: &[Experiment] = &[
    Experiment {
        name: "photon-shape",
        about: "photon waveform from a Gaussian control pulse",
        stochastic: false,
        sections: &["cqed", "photon_shape"],
        run: photon_shape,
    },
    Experiment {
        name: "pulse-invert",
        about: "control pulse that produces a target photon shape",
        stochastic: false,
        sections: &["cqed", "pulse_invert"],
        run: pulse_invert,
    },
    Experiment {
        name: "g2",
        about: "g2(tau) histogram from quantum-jump trajectories",
        stochastic: true,
        sections: &["cqed", "trajectories"],
        run: g2,
    },
    Experiment {
        name: "gamma-t-sweep",
        about: "g2(0) versus spin relaxation rate",
        stochastic: true,
        sections: &["cqed", "trajectories", "gamma_t_sweep"],
        run: gamma_t,
    },
    Experiment {
        name: "spectrum-fit",
        about: "fit of a noisy reflection spectrum and coupling classification",
        stochastic: true,
        sections: &["cqed", "spectrum_fit"],
        run: spectrum_fit,
    },
    Experiment {
        name: "efficiency-map",
        about: "extraction efficiency over waveguide and scattering loss rates",
        stochastic: false,
        sections: &["cqed", "efficiency_map"],
        run: efficiency_map,
    },
    Experiment {
        name: "kappa-opt",
        about: "extraction efficiency versus waveguide coupling and its optimum",
        stochastic: false,
        sections: &["cqed", "kappa_opt"],
        run: kappa_opt,
    },
    Experiment {
        name: "quasipotential",
        about: "1-D mirror-strength scans, Pareto front and matched-coupling comparison",
        stochastic: false,
        sections: &["quasipotential"],
        run: quasipotential,
    },
    Experiment {
        name: "stream-stats",
        about: "consecutive-click run statistics, efficiency fit and loss budget",
        stochastic: true,
        sections: &["stream_stats", "loss_budget"],
        run: stream_stats,
    },
    Experiment {
        name: "wcs-gain",
        about: "rate gain over an attenuated coherent source",
        stochastic: true,
        sections: &["wcs_gain", "downtime"],
        run: wcs,
    },
    Experiment {
        name: "nuclear-correlations",
        about: "frequency-labelled photon correlations from a nuclear spin chain",
        stochastic: true,
        sections: &["nuclear"],
        run: nuclear,
    },
    Experiment {
        name: "hyperfine-scan",
        about: "filtered photon spectrum over the nuclear hyperfine splitting",
        stochastic: false,
        sections: &["hyperfine"],
        run: hyperfine,
    },
    Experiment {
        name: "t1-fit",
        about: "exponential fit of a synthetic spin relaxation curve",
        stochastic: true,
        sections: &["t1_fit"],
        run: t1_fit,
    },
    Experiment {
        name: "thermal-1k",
        about: "thermal population, dephasing and relaxation estimates",
        stochastic: false,
        sections: &["thermal"],
        run: thermal,
    },
];

pub fn find(name: &str) -> Option<&'static Experiment> {
    CATALOG.iter().find(|e| e.name == name)
}

fn cqed(cfg: &Config) -> Result<CqedParams> {
    let spin_relaxation = match cfg.str("cqed.spin_relaxation")? {
        "symmetric" => SpinRelaxation::Symmetric,
        "down_only" => SpinRelaxation::DownOnly,
        other => bail!("key `cqed.spin_relaxation`: expected \"symmetric\" or \"down_only\", got \"{other}\""),
    };
    Ok(CqedParams {
        g: cfg.f64("cqed.g")?,
        kappa_w: cfg.f64("cqed.kappa_w")?,
        kappa_s: cfg.f64("cqed.kappa_s")?,
        gamma: cfg.f64("cqed.gamma")?,
        gamma_t: cfg.f64("cqed.gamma_t")?,
        delta: cfg.f64("cqed.delta")?,
        delta_c: cfg.f64("cqed.delta_c")?,
        spin_relaxation,
    })
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn gaussian(amplitude: f64, mu: f64, sigma: f64) -> Result<sivsim_core::pulse::PulseEnvelope> {
    Ok(make_pulse(&PulseShape::Gaussian(GaussianSpec::new(amplitude, mu, sigma)))?)
}

fn photon_shape(cx: &mut Ctx) -> Result<()> {
    let c = cx.cfg;
    let p = cqed(c)?;
    let pulse = gaussian(
        c.f64("photon_shape.amplitude")?,
        c.f64("photon_shape.center_ns")?,
        c.f64("photon_shape.sigma_ns")?,
    )?;
    let grid = TimeGrid::new(0.0, c.f64("photon_shape.t_end_ns")?, c.usize("photon_shape.samples")?)?;
    let w = simulate_photon(&p, &pulse, &grid)?;
    let rep = verify_adiabaticity(&p, &pulse, c.f64("photon_shape.adiabatic_threshold")?)?;
    cx.out.csv(
        "waveform.csv",
        &["t_ns", "flux_per_ns", "omega_GHz"],
        w.times().iter().zip(w.flux()).map(|(&t, &f)| vec![t, f, pulse.eval(t).re]),
    )?;
    let fwhm = w.fwhm().unwrap_or(f64::NAN);
    cx.out.headline("fwhm", fwhm, None, "ns");
    cx.out.headline("emission_probability", w.total_probability(), None, "");
    cx.out.headline("peak_time", w.peak().0, None, "ns");
    cx.out.line(format!(
        "max excited population {:.3e}, max Omega_R/Gamma {:.4}, adiabatic {}",
        rep.max_excited_population, rep.ratio_max, rep.adiabatic
    ));
    Ok(())
}

fn pulse_invert(cx: &mut Ctx) -> Result<()> {
    let c = cx.cfg;
    let p = cqed(c)?;
    let family = match c.str("pulse_invert.family")? {
        "exponential" => TargetFamily::exponential(),
        "gaussian" => TargetFamily::gaussian(),
        "ten_peak" => TargetFamily::ten_peak(),
        other => bail!(
            "key `pulse_invert.family`: expected \"exponential\", \"gaussian\" or \"ten_peak\", got \"{other}\""
        ),
    };
    let target = family.waveform(0.5, c.f64("pulse_invert.dt_ns")?)?;
    let opts = InversionOptions {
        tolerance: c.f64("pulse_invert.tolerance")?,
        normalization: Normalization::FractionOfBranching(c.f64("pulse_invert.branching_fraction")?),
        margin: c.f64("pulse_invert.margin")?,
        ..InversionOptions::default()
    };
    let res = invert_target_shape(&target, &p, &opts)?;
    // Independent check on a finer grid.
    let (t0, t1) = (target.times()[0], *target.times().last().unwrap_or(&0.0));
    let step = c.f64("pulse_invert.check_step_ns")?;
    let grid = TimeGrid::new(t0, t1, ((t1 - t0) / step) as usize + 1)?;
    let check = simulate_photon(&p, &res.envelope, &grid)?;
    let rms = res.target.relative_rms_error(&check);
    cx.out.csv(
        "photon.csv",
        &["t_ns", "target_per_ns", "achieved_per_ns"],
        res.target
            .times()
            .iter()
            .zip(res.target.flux())
            .map(|(&t, &f)| vec![t, f, res.achieved.eval(t)]),
    )?;
    cx.out.csv(
        "envelope.csv",
        &["t_ns", "omega_re_GHz", "omega_im_GHz"],
        res.envelope
            .times()
            .iter()
            .zip(res.envelope.values())
            .map(|(&t, v)| vec![t, v.re, v.im]),
    )?;
    cx.out.headline("rms_error", rms, None, "of peak");
    cx.out.headline("emission_probability", check.total_probability(), None, "");
    cx.out.headline("peak_drive", res.envelope.max_abs(), None, "GHz");
    cx.out.line(format!(
        "converged {} after {} iterations{}",
        res.converged,
        res.iterations,
        res.diagnostic.map(|d| format!(" ({d})")).unwrap_or_default()
    ));
    Ok(())
}

fn trajectory_config(c: &Config, seed: u64) -> Result<TrajectoryConfig> {
    let mut t = TrajectoryConfig::reference(c.usize("trajectories.n_trajectories")?, seed);
    t.repetitions = c.usize("trajectories.repetitions")?;
    t.period_ns = c.f64("trajectories.period_ns")?;
    t.resolution_ns = c.f64("trajectories.resolution_ns")?;
    t.step_ns = c.f64("trajectories.step_ns")?;
    t.pulse_sequence = vec![
        SequencePulse {
            envelope: gaussian(
                c.f64("trajectories.generate_amplitude")?,
                c.f64("trajectories.generate_center_ns")?,
                c.f64("trajectories.generate_sigma_ns")?,
            )?,
            role: PulseRole::Generate,
        },
        SequencePulse {
            envelope: gaussian(
                c.f64("trajectories.reinit_amplitude")?,
                c.f64("trajectories.reinit_center_ns")?,
                c.f64("trajectories.reinit_sigma_ns")?,
            )?,
            role: PulseRole::Reinitialize,
        },
    ];
    t.validate()?;
    Ok(t)
}

fn g2(cx: &mut Ctx) -> Result<()> {
    let c = cx.cfg;
    let p = cqed(c)?;
    let t = trajectory_config(c, cx.seed)?;
    let stream = run_trajectories(&p, &t)?;
    let h = g2_histogram(&stream, c.f64("trajectories.bin_width_ns")?, c.f64("trajectories.max_tau_ns")?)?;
    let (g, sigma) = g2_zero_with_error(&h, h.pulse_spacing_ns)?;
    let norm = h.normalization;
    cx.out.csv(
        "g2_histogram.csv",
        &["tau_ns", "coincidences", "normalized"],
        h.bins.iter().map(|&(tau, n)| vec![tau, n, n / norm]),
    )?;
    let mut records = Vec::new();
    stream.write_records(&mut records)?;
    cx.out.file("clicks.csv", &String::from_utf8(records)?)?;
    cx.out.headline("g2_zero", g, Some(sigma), "");
    cx.out.headline("emissions_per_pulse", stream.mean_emissions_per_pulse(), None, "");
    cx.out.line(format!(
        "{} trajectories x {} pulses, {} emission records",
        stream.meta.n_trajectories,
        stream.meta.pulses_per_trajectory,
        stream.emissions().count()
    ));
    Ok(())
}

fn gamma_t(cx: &mut Ctx) -> Result<()> {
    let c = cx.cfg;
    let p = cqed(c)?;
    let t = trajectory_config(c, cx.seed)?;
    let values = c.f64_list("gamma_t_sweep.values_ghz")?;
    let pts = gamma_t_sweep(&p, &values, &t, c.f64("trajectories.bin_width_ns")?)?;
    cx.out.csv(
        "g2_vs_gamma_t.csv",
        &["gamma_t_kHz", "g2_zero", "g2_sigma"],
        pts.iter().map(|s| vec![s.gamma_t * 1e6, s.g2_zero, s.g2_sigma]),
    )?;
    for s in &pts {
        cx.out.headline(
            &format!("g2_zero@{}kHz", s.gamma_t * 1e6),
            s.g2_zero,
            Some(s.g2_sigma),
            "",
        );
    }
    Ok(())
}

fn spectrum_fit(cx: &mut Ctx) -> Result<()> {
    let c = cx.cfg;
    let p = cqed(c)?;
    let omega_c = c.f64("spectrum_fit.omega_c")?;
    let grid = SpectrumGrid {
        broad_half_width: c.f64("spectrum_fit.broad_half_width")?,
        broad_points: c.usize("spectrum_fit.broad_points")?,
        fine_half_width: c.f64("spectrum_fit.fine_half_width")?,
        fine_points: c.usize("spectrum_fit.fine_points")?,
    };
    let spectrum = synthetic_spectrum(
        &p,
        omega_c,
        omega_c + p.delta_c,
        &grid,
        c.f64("spectrum_fit.noise")?,
        cx.seed,
    )?;
    let guess = FitParams {
        g: c.f64("spectrum_fit.guess_g")?,
        kappa_tot: c.f64("spectrum_fit.guess_kappa_tot")?,
        kappa_w: c.f64("spectrum_fit.guess_kappa_w")?,
        gamma: c.f64("spectrum_fit.guess_gamma")?,
        omega_c: c.f64("spectrum_fit.guess_omega_c")?,
        omega_a: c.f64("spectrum_fit.guess_omega_a")?,
    };
    let opts = FitOptions {
        starts: c.usize("spectrum_fit.starts")?,
        jitter: c.f64("spectrum_fit.jitter")?,
        seed: cx.seed,
        overcoupled: c.bool("spectrum_fit.overcoupled")?,
        detrend: c.bool("spectrum_fit.detrend")?,
        max_iter: c.usize("spectrum_fit.max_iter")?,
    };
    let fit = fit_cqed_params(&spectrum, &guess, &opts)?;
    let (f, s) = (fit.params, fit.sigma);
    cx.out.csv(
        "spectrum.csv",
        &["omega_GHz", "R_measured", "R_fit"],
        spectrum.points.iter().map(|&(w, r)| vec![w, r, f.reflection(w)]),
    )?;
    let rows = [
        ("g", f.g, s.g),
        ("kappa_tot", f.kappa_tot, s.kappa_tot),
        ("kappa_w", f.kappa_w, s.kappa_w),
        ("gamma", f.gamma, s.gamma),
        ("omega_c", f.omega_c, s.omega_c),
        ("omega_a", f.omega_a, s.omega_a),
    ];
    let mut table = String::from("parameter,value_GHz,sigma_GHz\n");
    for (n, v, e) in rows {
        table.push_str(&format!("{n},{v},{e}\n"));
    }
    cx.out.file("fit_params.csv", &table)?;
    let coop = cooperativity(f.g, f.kappa_tot, f.gamma)?;
    let rel = ((2.0 * s.g / f.g).powi(2) + (s.kappa_tot / f.kappa_tot).powi(2) + (s.gamma / f.gamma).powi(2)).sqrt();
    let ev = classify_coupling(&f)?;
    cx.out.csv(
        "dip_vs_detuning.csv",
        &["detuning_GHz", "min_R"],
        ev.dip_vs_detuning.iter().map(|&(d, r)| vec![d, r]),
    )?;
    cx.out.headline("cooperativity", coop, Some(coop * rel), "");
    cx.out.headline("g", f.g, Some(s.g), "GHz");
    cx.out.headline("kappa_tot", f.kappa_tot, Some(s.kappa_tot), "GHz");
    cx.out.headline("gamma", f.gamma, Some(s.gamma), "GHz");
    cx.out.line(format!(
        "coupling {:?}: min R with emitter {:.4}, empty cavity {:.4}; fit rms {:.3e}, converged {}",
        ev.class, ev.emitter_minimum, ev.bare_minimum, fit.rms, fit.converged
    ));
    Ok(())
}

fn efficiency_map(cx: &mut Ctx) -> Result<()> {
    let c = cx.cfg;
    let p = cqed(c)?;
    let kw = linspace(
        c.f64("efficiency_map.kappa_w_min")?,
        c.f64("efficiency_map.kappa_w_max")?,
        c.usize("efficiency_map.kappa_w_points")?,
    );
    let ks = linspace(
        c.f64("efficiency_map.kappa_s_min")?,
        c.f64("efficiency_map.kappa_s_max")?,
        c.usize("efficiency_map.kappa_s_points")?,
    );
    let mut rows = Vec::with_capacity(kw.len() * ks.len());
    for &s in &ks {
        for &w in &kw {
            rows.push(vec![w, s, source_efficiency(p.g, w, s, p.gamma)?.eta_s]);
        }
    }
    cx.out.csv("efficiency_map.csv", &["kappa_w_GHz", "kappa_s_GHz", "eta_s"], rows)?;
    let here = source_efficiency(p.g, p.kappa_w, p.kappa_s, p.gamma)?;
    cx.out.headline("eta_s", here.eta_s, None, "");
    cx.out.headline("cooperativity", cooperativity(p.g, p.kappa_w + p.kappa_s, p.gamma)?, None, "");
    cx.out.line(format!("p_c {:.4}, p_w {:.4} at the configured rates", here.p_c, here.p_w));
    Ok(())
}

fn kappa_opt(cx: &mut Ctx) -> Result<()> {
    let c = cx.cfg;
    let p = cqed(c)?;
    let kw = linspace(
        c.f64("kappa_opt.kappa_w_min")?,
        c.f64("kappa_opt.kappa_w_max")?,
        c.usize("kappa_opt.points")?,
    );
    let rows = kw
        .iter()
        .map(|&w| Ok(vec![w, source_efficiency(p.g, w, p.kappa_s, p.gamma)?.eta_s]))
        .collect::<Result<Vec<_>>>()?;
    cx.out.csv("eta_vs_kappa_w.csv", &["kappa_w_GHz", "eta_s"], rows)?;
    let k_opt = optimal_waveguide_rate(p.kappa_s, p.g, p.gamma)?;
    cx.out.headline("kappa_w_opt", k_opt, None, "GHz");
    cx.out.headline("eta_s_max", source_efficiency(p.g, k_opt, p.kappa_s, p.gamma)?.eta_s, None, "");
    cx.out.headline("eta_s", source_efficiency(p.g, p.kappa_w, p.kappa_s, p.gamma)?.eta_s, None, "");
    Ok(())
}

fn scan_rows(points: &[ScanPoint], lambda_nm: f64) -> Result<Vec<Vec<f64>>> {
    points
        .iter()
        .map(|s| {
            let d = &s.scores;
            Ok(vec![
                s.left_height_thz,
                s.right_height_thz,
                d.q_left,
                d.q_right,
                d.q_total,
                d.v,
                d.kappa_left_ghz,
                d.kappa_right_ghz,
                s.effective_barrier,
                design_fitness(d, lambda_nm, lambda_nm)?,
            ])
        })
        .collect()
}

const SCAN_HEADER: &[&str] = &[
    "left_height_THz",
    "right_height_THz",
    "Q_left",
    "Q_right",
    "Q_total",
    "V_lambda_over_n_cubed",
    "kappa_left_GHz",
    "kappa_right_GHz",
    "effective_barrier",
    "fitness",
];

fn quasipotential(cx: &mut Ctx) -> Result<()> {
    let c = cx.cfg;
    let model = QuasipotentialModel {
        stiffness: c.f64("quasipotential.stiffness")?,
        mode_frequency_thz: c.f64("quasipotential.mode_frequency_thz")?,
        wavelength_nm: c.f64("quasipotential.wavelength_nm")?,
        refractive_index: c.f64("quasipotential.refractive_index")?,
        transverse_area: c.f64("quasipotential.transverse_area")?,
        q_scat: c.f64("quasipotential.q_scat")?,
    };
    let template = CavityTemplate {
        left_cells: c.usize("quasipotential.left_cells")?,
        right_cells: c.usize("quasipotential.right_cells")?,
        cell_nm: c.f64("quasipotential.cell_nm")?,
        well_depth_thz: c.f64("quasipotential.well_depth_thz")?,
        well_width_nm: c.f64("quasipotential.well_width_nm")?,
    };
    let lambda = model.wavelength_nm;
    let heights = c.f64_list("quasipotential.symmetric_heights_thz")?;
    let sym = symmetric_height_scan(&template, &model, &heights);
    cx.out.csv("symmetric_scan.csv", SCAN_HEADER, scan_rows(&sym, lambda)?)?;

    let lefts = c.f64_list("quasipotential.left_heights_thz")?;
    let pairs: Vec<(f64, f64)> = lefts.iter().flat_map(|&l| heights.iter().map(move |&r| (l, r))).collect();
    let grid = height_scan(&template, &model, &pairs);
    cx.out.csv("asymmetric_scan.csv", SCAN_HEADER, scan_rows(&grid, lambda)?)?;
    cx.out.csv("pareto_front.csv", SCAN_HEADER, scan_rows(&pareto_front(&grid), lambda)?)?;

    let cmp = matched_kappa_comparison(
        &template,
        &model,
        c.f64("quasipotential.target_kappa_right_ghz")?,
        c.pair("quasipotential.match_range_thz")?,
        &lefts,
    )?;
    let mut matched = vec![cmp.symmetric.clone()];
    matched.extend(cmp.asymmetric.iter().cloned());
    cx.out.csv("matched_comparison.csv", SCAN_HEADER, scan_rows(&matched, lambda)?)?;
    cx.out.headline("v_symmetric", cmp.symmetric.scores.v, None, "(lambda/n)^3");
    cx.out.headline("v_best_asymmetric", cmp.best_asymmetric.scores.v, None, "(lambda/n)^3");
    cx.out.headline("q_total_best_asymmetric", cmp.best_asymmetric.scores.q_total, None, "");
    cx.out.line(format!(
        "matched kappa_right {} GHz: asymmetric design wins {} (left {:.1} THz, right {:.2} THz)",
        cmp.target_kappa_right_ghz,
        cmp.asymmetric_wins(),
        cmp.best_asymmetric.left_height_thz,
        cmp.best_asymmetric.right_height_thz
    ));
    Ok(())
}

fn stream_stats(cx: &mut Ctx) -> Result<()> {
    let c = cx.cfg;
    let eta = c.f64("stream_stats.eta")?;
    let attempts = c.u64("stream_stats.attempts")?;
    let sigma = c.f64("stream_stats.modulation_sigma")?;
    let stats = if sigma > 0.0 {
        let m = OuModulation {
            relative_sigma: sigma,
            correlation_attempts: c.f64("stream_stats.modulation_correlation")?,
        };
        count_streams_modulated(eta, attempts, m, cx.seed)?
    } else {
        count_streams(eta, attempts, cx.seed)?
    };
    let fit = fit_stream_efficiency(&stats, c.usize("stream_stats.fit_n_max")?)?;
    cx.out.csv(
        "run_histogram.csv",
        &["run_length", "count", "expected"],
        (1..=stats.n_max()).map(|n| {
            vec![n as f64, stats.count(n) as f64, expected_maximal_runs(eta, attempts, n)]
        }),
    )?;
    let budget = LossBudget {
        initialization: c.pair("loss_budget.initialization")?,
        siv_to_waveguide: c.pair("loss_budget.siv_to_waveguide")?,
        fiber_coupling: c.pair("loss_budget.fiber_coupling")?,
        filter_setup: c.pair("loss_budget.filter_setup")?,
        fiber_network: c.pair("loss_budget.fiber_network")?,
        detector: c.pair("loss_budget.detector")?,
    };
    let (lo, hi) = budget.product()?;
    let mut table = String::from("factor,low,high\n");
    for (name, (a, b)) in budget.factors() {
        table.push_str(&format!("{name},{a},{b}\n"));
    }
    table.push_str(&format!("product,{lo},{hi}\n"));
    cx.out.file("loss_budget.csv", &table)?;
    let scale = c.f64("stream_stats.scale_attempts")?;
    let e = fit.value;
    cx.out.headline("eta_fit", e, Some(fit.sigma), "");
    cx.out.headline("loss_budget_low", lo, None, "");
    cx.out.headline("loss_budget_high", hi, None, "");
    cx.out.line(format!(
        "{} attempts, {} successes, longest run {}; expected 11-click runs at {scale:e} attempts: {:.1}",
        stats.attempts,
        stats.successes,
        stats.n_max(),
        scale * e.powi(11) * (1.0 - e).powi(2)
    ));
    Ok(())
}

fn wcs(cx: &mut Ctx) -> Result<()> {
    let c = cx.cfg;
    let eff = c.f64("wcs_gain.per_pulse_efficiency")?;
    let duty = duty_cycle(c.f64("wcs_gain.rep_rate_khz")?, eff, c.f64("wcs_gain.click_rate_khz")?)?;
    let g2 = c.f64("wcs_gain.g2_zero")?;
    let gain = wcs_gain(duty, g2)?.value();
    let mc = wcs_monte_carlo(eff, g2, duty, c.u64("wcs_gain.mc_pulses")?, cx.seed)?;
    let g2_grid: Vec<f64> = (0..=40).map(|k| 10f64.powf(-3.0 + 3.0 * k as f64 / 40.0)).collect();
    cx.out.csv(
        "gain_vs_g2.csv",
        &["g2_zero", "gain"],
        g2_grid.iter().map(|&g| vec![g, duty / g]),
    )?;
    let down = DowntimeDecomposition {
        ionization: c.f64("downtime.ionization")?,
        relock: c.f64("downtime.relock")?,
        software: c.f64("downtime.software")?,
    };
    let total = down.of_total_time(duty.min(1.0))?;
    cx.out.csv(
        "downtime.csv",
        &["ionization_fraction", "relock_fraction", "software_fraction"],
        [vec![total.ionization, total.relock, total.software]],
    )?;
    cx.out.headline("duty_cycle", duty, None, "");
    cx.out.headline("gain", gain, None, "");
    cx.out.headline("gain_mc", mc.rate_ratio, Some(mc.rate_ratio_sigma), "");
    cx.out.line(format!(
        "multi-photon fraction: source {:.3e} ± {:.1e}, coherent {:.3e} ± {:.1e}",
        mc.infidelity_sps, mc.infidelity_sps_sigma, mc.infidelity_wcs, mc.infidelity_wcs_sigma
    ));
    Ok(())
}

fn nuclear(cx: &mut Ctx) -> Result<()> {
    let c = cx.cfg;
    let p = c.f64("nuclear.p_flip")?;
    let leakage = c.f64("nuclear.leakage")?;
    let mut cfg = NuclearChainConfig::new(p, c.usize("nuclear.n_photons")?, cx.seed);
    cfg.chains = c.usize("nuclear.chains")?;
    cfg.detection_efficiency = c.f64("nuclear.detection_efficiency")?;
    if cfg.chains > 1 {
        cfg.initial = None;
    }
    let stream = simulate_nuclear_chain(&cfg, c.f64("nuclear.init_fidelity")?, leakage)?;
    let corr = nuclear_correlations(&stream, c.usize("nuclear.max_lag")?)?;
    cx.out.csv(
        "correlations.csv",
        &["lag_photons", "g_down_down", "g_down_down_sigma", "g_down_up", "g_down_up_sigma"],
        (0..corr.lags.len()).map(|i| {
            vec![
                corr.lags[i] as f64,
                corr.g_down_down[i],
                corr.g_down_down_sigma[i],
                corr.g_down_up[i],
                corr.g_down_up_sigma[i],
            ]
        }),
    )?;
    cx.out.headline("bunching_decay", corr.bunching.value, Some(corr.bunching.sigma), "photons");
    cx.out.headline("antibunching_decay", corr.antibunching.value, Some(corr.antibunching.sigma), "photons");
    cx.out.headline("p_flip_markov", corr.p_flip_markov, None, "");
    cx.out.headline("p_flip_inverse", corr.p_flip_inverse, None, "");
    cx.out.line(format!(
        "symmetric-chain decay -1/ln(1-2p) = {:.1}; 1/p = {:.1}",
        markov_decay_constant(p),
        1.0 / p
    ));
    let ratio = consecutive_label_ratio(&stream)?;
    let leak16 = leakage_for_ratio(p, 16.0)
        .map(|l| format!("{l:.4}"))
        .unwrap_or_else(|e| format!("unavailable ({e})"));
    cx.out.line(format!(
        "same/opposite label ratio {ratio:.2} (expected {:.2} at leakage {leakage}); leakage for ratio 16: {leak16}",
        expected_label_ratio(p, leakage)
    ));
    Ok(())
}

fn hyperfine(cx: &mut Ctx) -> Result<()> {
    let c = cx.cfg;
    let scan = HyperfineScan {
        splitting_mhz: c.f64("hyperfine.splitting_mhz")?,
        filter_fwhm_mhz: c.f64("hyperfine.filter_fwhm_mhz")?,
        photon_linewidth_mhz: c.f64("hyperfine.photon_linewidth_mhz")?,
        scan_half_width_mhz: c.f64("hyperfine.scan_half_width_mhz")?,
        points: c.usize("hyperfine.points")?,
        populations: c.pair("hyperfine.populations")?,
    };
    let h = hyperfine_scan(&scan)?;
    cx.out.csv(
        "hyperfine_spectrum.csv",
        &["detuning_MHz", "rate"],
        h.points.iter().map(|&(d, r)| vec![d, r]),
    )?;
    cx.out.headline("peak_separation", h.peak_separation().unwrap_or(f64::NAN), None, "MHz");
    cx.out.headline("peak_fwhm", h.fwhm_mhz, None, "MHz");
    cx.out.line(format!("{} peaks at {:?} MHz", h.peaks_mhz.len(), h.peaks_mhz));
    Ok(())
}

fn t1_fit(cx: &mut Ctx) -> Result<()> {
    let c = cx.cfg;
    let t1 = c.f64("t1_fit.t1_ns")?;
    let times = linspace(0.0, c.f64("t1_fit.t_max_ns")?, c.usize("t1_fit.points")?);
    let ys = synthetic_decay_curve(&times, c.f64("t1_fit.amplitude")?, t1, c.f64("t1_fit.noise")?, cx.seed);
    let fit = fit_exponential_decay(&times, &ys, DecayModel::Exponential, Weights::Uniform)?;
    cx.out.csv(
        "decay.csv",
        &["t_ns", "population", "fit"],
        times
            .iter()
            .zip(&ys)
            .map(|(&t, &y)| vec![t, y, fit.amplitude * (-t / fit.value).exp()]),
    )?;
    cx.out.headline("t1", fit.value, Some(fit.sigma), "ns");
    cx.out.line(format!("generating T1 {t1} ns, {} points used", fit.points));
    Ok(())
}

fn thermal(cx: &mut Ctx) -> Result<()> {
    let c = cx.cfg;
    let inputs = ThermalInputs {
        temperature_k: c.f64("thermal.temperature_k")?,
        delta_gs_ghz: c.f64("thermal.delta_gs_ghz")?,
        t2_star_ns: c.f64("thermal.t2_star_ns")?,
        t1_ns: c.f64("thermal.t1_ns")?,
        photon_fwhm_ns: c.f64("thermal.photon_fwhm_ns")?,
    };
    let t = thermal_estimates(&inputs)?;
    cx.out.csv(
        "thermal.csv",
        &["temperature_K", "upper_branch_population", "linewidth_increase", "population_decay_loss"],
        [vec![inputs.temperature_k, t.upper_branch_population, t.linewidth_increase, t.population_decay_loss]],
    )?;
    cx.out.headline("upper_branch_population", t.upper_branch_population, None, "");
    cx.out.headline("linewidth_increase", t.linewidth_increase, None, "");
    cx.out.headline("population_decay_loss", t.population_decay_loss, None, "");
    Ok(())
}
