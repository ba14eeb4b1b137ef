use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::decay::{fit_exponential_decay, DecayFit, DecayModel, Weights};
use crate::trajectories::{ClickChannel, ClickRecord, ClickStream, FreqLabel, StreamMeta};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuclearChainConfig {
    /// Nuclear flip probability per emitted photon.
    pub p_flip: f64,
    /// Generation attempts per chain.
    pub n_photons: usize,
    pub seed: u64,
    /// Initial nuclear state; drawn 50/50 per chain when `None`.
    pub initial: Option<FreqLabel>,
    /// Independent chains, one trajectory each.
    pub chains: usize,
    /// Probability that an emitted photon is detected.
    pub detection_efficiency: f64,
    /// Attempt spacing written into the stream metadata.
    pub pulse_spacing_ns: f64,
}

impl NuclearChainConfig {
    pub fn new(p_flip: f64, n_photons: usize, seed: u64) -> Self {
        Self {
            p_flip,
            n_photons,
            seed,
            initial: Some(FreqLabel::Down),
            chains: 1,
            detection_efficiency: 1.0,
            pulse_spacing_ns: 1e6 / 405.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.5).contains(&self.p_flip) {
            return Err(Error::invalid("p_flip", format!("must lie in [0, 0.5], got {}", self.p_flip)));
        }
        if self.n_photons == 0 || self.chains == 0 {
            return Err(Error::EmptyInput("n_photons"));
        }
        if !(0.0..=1.0).contains(&self.detection_efficiency) {
            return Err(Error::invalid("detection_efficiency", "must lie in [0, 1]"));
        }
        crate::error::ensure_positive("pulse_spacing_ns", self.pulse_spacing_ns)
    }
}

/// Two-state nuclear Markov chain read out through frequency-labelled
/// photons. Each attempt emits with probability `electron_init_fidelity`;
/// each emission flips the nuclear state with probability `p_flip`. The
/// recorded label is wrong with probability `filter_leakage`.
pub fn simulate_nuclear_chain(
    config: &NuclearChainConfig,
    electron_init_fidelity: f64,
    filter_leakage: f64,
) -> Result<ClickStream> {
    config.validate()?;
    if !(0.0..=1.0).contains(&electron_init_fidelity) {
        return Err(Error::invalid("electron_init_fidelity", "must lie in [0, 1]"));
    }
    if !(0.0..=0.5).contains(&filter_leakage) {
        return Err(Error::invalid("filter_leakage", "must lie in [0, 0.5]"));
    }
    let mut records = Vec::new();
    for chain in 0..config.chains {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(chain as u64);
        let mut state = config.initial.unwrap_or_else(|| {
            if rng.random::<bool>() {
                FreqLabel::Up
            } else {
                FreqLabel::Down
            }
        });
        for i in 0..config.n_photons {
            if rng.random::<f64>() >= electron_init_fidelity {
                continue;
            }
            let label = if rng.random::<f64>() < filter_leakage {
                state.flipped()
            } else {
                state
            };
            if rng.random::<f64>() < config.detection_efficiency {
                records.push(ClickRecord {
                    traj: chain as u32,
                    pulse: i as u32,
                    t_ns: i as f64 * config.pulse_spacing_ns,
                    channel: ClickChannel::Emission,
                    freq: Some(label),
                });
            }
            if rng.random::<f64>() < config.p_flip {
                state = state.flipped();
            }
        }
    }
    let meta = StreamMeta {
        n_trajectories: config.chains,
        pulses_per_trajectory: config.n_photons,
        pulse_spacing_ns: config.pulse_spacing_ns,
        seed: Some(config.seed),
        config: serde_json::json!({
            "p_flip": config.p_flip,
            "electron_init_fidelity": electron_init_fidelity,
            "filter_leakage": filter_leakage,
            "detection_efficiency": config.detection_efficiency,
        }),
    };
    ClickStream::new(meta, records)
}

/// Correlation decay constant of a symmetric two-state chain,
/// `−1/ln(1−2p)` photons.
pub fn markov_decay_constant(p_flip: f64) -> f64 {
    if p_flip <= 0.0 {
        return f64::INFINITY;
    }
    -1.0 / (1.0 - 2.0 * p_flip).ln()
}

/// Same-label over opposite-label pairs of consecutive photons.
pub fn expected_label_ratio(p_flip: f64, leakage: f64) -> f64 {
    let keep = (1.0 - leakage).powi(2) + leakage * leakage;
    let swap = 2.0 * leakage * (1.0 - leakage);
    let same = (1.0 - p_flip) * keep + p_flip * swap;
    let opposite = (1.0 - p_flip) * swap + p_flip * keep;
    same / opposite
}

/// Leakage that brings [`expected_label_ratio`] down to `ratio`.
pub fn leakage_for_ratio(p_flip: f64, ratio: f64) -> Result<f64> {
    if !(p_flip > 0.0 && p_flip < 0.5) {
        return Err(Error::invalid("p_flip", "must lie in (0, 0.5)"));
    }
    let max = expected_label_ratio(p_flip, 0.0);
    if !(ratio >= 1.0 && ratio <= max) {
        return Err(Error::invalid("ratio", format!("must lie in [1, {max}]")));
    }
    let (mut lo, mut hi) = (0.0, 0.5);
    for _ in 0..100 {
        let m = 0.5 * (lo + hi);
        if expected_label_ratio(p_flip, m) > ratio {
            lo = m;
        } else {
            hi = m;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn labelled_pulses(stream: &ClickStream) -> Vec<(u32, u32, FreqLabel)> {
    stream
        .emissions()
        .filter_map(|r| r.freq.map(|f| (r.traj, r.pulse, f)))
        .collect()
}

/// Ratio of same-label to opposite-label detections on consecutive
/// attempts.
pub fn consecutive_label_ratio(stream: &ClickStream) -> Result<f64> {
    let l = labelled_pulses(stream);
    let (mut same, mut opposite) = (0u64, 0u64);
    for w in l.windows(2) {
        if w[0].0 == w[1].0 && w[1].1 == w[0].1 + 1 {
            if w[0].2 == w[1].2 {
                same += 1;
            } else {
                opposite += 1;
            }
        }
    }
    if opposite == 0 {
        return Err(Error::invalid("stream", "no opposite-label consecutive pairs"));
    }
    Ok(same as f64 / opposite as f64)
}

/// Mean of `s_i·s_{i+lag}` over the detected-photon sequence with
/// `s = ±1`, and its standard error.
pub fn label_autocorrelation(stream: &ClickStream, lag: usize) -> Result<(f64, f64)> {
    let s: Vec<f64> = labelled_pulses(stream)
        .iter()
        .map(|x| if x.2 == FreqLabel::Up { 1.0 } else { -1.0 })
        .collect();
    if s.len() <= lag + 1 {
        return Err(Error::EmptyInput("labelled photons"));
    }
    let n = s.len() - lag;
    let m = s[..n].iter().zip(&s[lag..]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
    Ok((m, ((1.0 - m * m).max(0.0) / n as f64).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuclearCorrelations {
    /// Lag in attempts (photon number).
    pub lags: Vec<usize>,
    pub g_down_down: Vec<f64>,
    pub g_down_down_sigma: Vec<f64>,
    pub g_down_up: Vec<f64>,
    pub g_down_up_sigma: Vec<f64>,
    /// Fit of `g↓↓ − 1`.
    pub bunching: DecayFit,
    /// Fit of `1 − g↓↑`.
    pub antibunching: DecayFit,
    /// Flip probability under the symmetric-chain reading, `(1 − e^{−1/τ})/2`.
    pub p_flip_markov: f64,
    /// Flip probability under the `p = 1/τ` reading.
    pub p_flip_inverse: f64,
}

impl NuclearCorrelations {
    /// Mean of the two fitted decay constants.
    pub fn decay_constant(&self) -> f64 {
        0.5 * (self.bunching.value + self.antibunching.value)
    }
}

struct Bits(Vec<u64>);

impl Bits {
    fn new(len: usize) -> Self {
        Bits(vec![0; len.div_ceil(64) + 1])
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn count(&self) -> u64 {
        self.0.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Popcount of `self[i] & other[i + lag]` over all `i`.
    fn lagged_overlap(&self, other: &Bits, lag: usize) -> u64 {
        let (q, r) = (lag / 64, lag % 64);
        let n = self.0.len();
        let mut total = 0u64;
        for k in 0..n.saturating_sub(q) {
            let lo = other.0[k + q] >> r;
            let hi = if r > 0 && k + q + 1 < n {
                other.0[k + q + 1] << (64 - r)
            } else {
                0
            };
            total += (self.0[k] & (lo | hi)).count_ones() as u64;
        }
        total
    }
}

/// Intensity correlations of the two frequency channels against photon
/// number, `g↓↓(n)` and `g↓↑(n)` for `n = 1..=max_lag`, normalized by the
/// product of the channel means. The envelopes are fitted from lag 1 up to
/// the first lag where they fall below three standard errors.
pub fn nuclear_correlations(stream: &ClickStream, max_lag: usize) -> Result<NuclearCorrelations> {
    let len = stream.meta.pulses_per_trajectory;
    if max_lag < 3 || max_lag >= len {
        return Err(Error::invalid("max_lag", format!("must lie in [3, {len})")));
    }
    let mut down = Vec::new();
    let mut up = Vec::new();
    for t in 0..stream.meta.n_trajectories {
        down.push((t, Bits::new(len)));
        up.push((t, Bits::new(len)));
    }
    for (traj, pulse, f) in labelled_pulses(stream) {
        let target = if f == FreqLabel::Down { &mut down } else { &mut up };
        target[traj as usize].1.set(pulse as usize);
    }
    let total = (stream.meta.n_trajectories * len) as f64;
    let nd: u64 = down.iter().map(|b| b.1.count()).sum();
    let nu: u64 = up.iter().map(|b| b.1.count()).sum();
    if nd == 0 || nu == 0 {
        return Err(Error::invalid("stream", "both frequency labels are required"));
    }
    let (md, mu) = (nd as f64 / total, nu as f64 / total);

    let mut out = NuclearCorrelations {
        lags: Vec::with_capacity(max_lag),
        g_down_down: Vec::new(),
        g_down_down_sigma: Vec::new(),
        g_down_up: Vec::new(),
        g_down_up_sigma: Vec::new(),
        bunching: placeholder_fit(),
        antibunching: placeholder_fit(),
        p_flip_markov: f64::NAN,
        p_flip_inverse: f64::NAN,
    };
    for lag in 1..=max_lag {
        let pairs = (stream.meta.n_trajectories * (len - lag)) as f64;
        let sdd: u64 = down.iter().map(|(_, b)| b.lagged_overlap(b, lag)).sum();
        let sdu: u64 = down
            .iter()
            .zip(&up)
            .map(|((_, d), (_, u))| d.lagged_overlap(u, lag))
            .sum();
        let norm_dd = pairs * md * md;
        let norm_du = pairs * md * mu;
        out.lags.push(lag);
        out.g_down_down.push(sdd as f64 / norm_dd);
        out.g_down_down_sigma.push((sdd.max(1) as f64).sqrt() / norm_dd);
        out.g_down_up.push(sdu as f64 / norm_du);
        out.g_down_up_sigma.push((sdu.max(1) as f64).sqrt() / norm_du);
    }

    let envelope = |ys: Vec<f64>, sig: &[f64]| -> Result<DecayFit> {
        let n = ys
            .iter()
            .zip(sig)
            .position(|(y, s)| *y < 3.0 * s)
            .unwrap_or(ys.len());
        if n < 3 {
            return Err(Error::FitFailure("correlation envelope lost in noise".into()));
        }
        let xs: Vec<f64> = out.lags[..n].iter().map(|&l| l as f64).collect();
        fit_exponential_decay(&xs, &ys[..n], DecayModel::Exponential, Weights::Sigma(&sig[..n]))
    };
    let bunch: Vec<f64> = out.g_down_down.iter().map(|g| g - 1.0).collect();
    let anti: Vec<f64> = out.g_down_up.iter().map(|g| 1.0 - g).collect();
    out.bunching = envelope(bunch, &out.g_down_down_sigma)?;
    out.antibunching = envelope(anti, &out.g_down_up_sigma)?;
    let tau = out.decay_constant();
    out.p_flip_markov = 0.5 * (1.0 - (-1.0 / tau).exp());
    out.p_flip_inverse = 1.0 / tau;
    Ok(out)
}

fn placeholder_fit() -> DecayFit {
    DecayFit {
        model: DecayModel::Exponential,
        value: f64::NAN,
        sigma: f64::NAN,
        amplitude: f64::NAN,
        points: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_model() {
        assert!((expected_label_ratio(0.009, 0.0) - 0.991 / 0.009).abs() < 1e-9);
        let r = expected_label_ratio(0.009, 0.06);
        assert!((r - 7.35).abs() < 0.01, "{r}");
        let e = leakage_for_ratio(0.009, 16.0).unwrap();
        assert!((expected_label_ratio(0.009, e) - 16.0).abs() < 1e-9);
        assert!((e - 0.026).abs() < 0.002, "{e}");
    }

    #[test]
    fn lagged_overlap_matches_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 500;
        let a: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        let b: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        let (mut ba, mut bb) = (Bits::new(n), Bits::new(n));
        for i in 0..n {
            if a[i] {
                ba.set(i);
            }
            if b[i] {
                bb.set(i);
            }
        }
        for lag in [1, 5, 63, 64, 65, 130, 499] {
            let want = (0..n - lag).filter(|&i| a[i] && b[i + lag]).count() as u64;
            assert_eq!(ba.lagged_overlap(&bb, lag), want, "lag {lag}");
        }
    }

    #[test]
    fn frozen_nucleus() {
        let s = simulate_nuclear_chain(&NuclearChainConfig::new(0.0, 1000, 2), 1.0, 0.0).unwrap();
        assert!(s.records.iter().all(|r| r.freq == Some(FreqLabel::Down)));
        assert_eq!(s.records.len(), 1000);
    }
}
