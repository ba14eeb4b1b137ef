use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::decay::{fit_exponential_decay, DecayFit, DecayModel, Weights};
use crate::trajectories::{ClickChannel, ClickStream};
use crate::{Error, Result};

/// Histogram of maximal runs of consecutive successful attempts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamStats {
    /// `histogram[n-1]` counts runs of exactly `n` successes.
    pub histogram: Vec<u64>,
    pub attempts: u64,
    pub successes: u64,
    #[serde(default)]
    pub rep_rate_khz: Option<f64>,
    #[serde(default)]
    pub duty_cycle: Option<f64>,
}

impl StreamStats {
    pub fn count(&self, n: usize) -> u64 {
        if n == 0 {
            return 0;
        }
        self.histogram.get(n - 1).copied().unwrap_or(0)
    }

    pub fn n_max(&self) -> usize {
        self.histogram.len()
    }

    /// Successes per attempt.
    pub fn ratio_efficiency(&self) -> f64 {
        self.successes as f64 / self.attempts as f64
    }
}

/// Expected number of maximal runs of length `n` among `attempts`
/// independent trials, counting the two runs that touch the ends.
pub fn expected_maximal_runs(eta: f64, attempts: u64, n: usize) -> f64 {
    let a = attempts as f64;
    let n64 = n as u64;
    if n == 0 || n64 > attempts {
        return 0.0;
    }
    let en = eta.powi(n as i32);
    if n64 == attempts {
        return en;
    }
    (a - n as f64 - 1.0) * en * (1.0 - eta).powi(2) + 2.0 * en * (1.0 - eta)
}

/// Runs of a contiguous block. Runs touching either edge are kept apart so
/// blocks merge associatively.
#[derive(Debug, Clone, Default)]
struct Block {
    len: u64,
    successes: u64,
    prefix: u64,
    suffix: u64,
    interior: Vec<u64>,
}

fn bump(hist: &mut Vec<u64>, n: u64) {
    if n == 0 {
        return;
    }
    let i = (n - 1) as usize;
    if hist.len() <= i {
        hist.resize(i + 1, 0);
    }
    hist[i] += 1;
}

impl Block {
    fn all_success(&self) -> bool {
        self.prefix == self.len
    }

    fn from_bits(bits: impl Iterator<Item = bool>) -> Self {
        let mut b = Block::default();
        let mut run = 0u64;
        let mut seen_failure = false;
        for s in bits {
            b.len += 1;
            if s {
                b.successes += 1;
                run += 1;
            } else {
                if seen_failure {
                    bump(&mut b.interior, run);
                } else {
                    b.prefix = run;
                    seen_failure = true;
                }
                run = 0;
            }
        }
        if seen_failure {
            b.suffix = run;
        } else {
            b.prefix = run;
            b.suffix = run;
        }
        b
    }

    fn merge(self, other: Block) -> Block {
        if self.len == 0 {
            return other;
        }
        if other.len == 0 {
            return self;
        }
        let mut out = Block {
            len: self.len + other.len,
            successes: self.successes + other.successes,
            ..Block::default()
        };
        match (self.all_success(), other.all_success()) {
            (true, true) => {
                out.prefix = out.len;
                out.suffix = out.len;
            }
            (true, false) => {
                out.prefix = self.len + other.prefix;
                out.suffix = other.suffix;
                out.interior = other.interior;
            }
            (false, true) => {
                out.prefix = self.prefix;
                out.suffix = self.suffix + other.len;
                out.interior = self.interior;
            }
            (false, false) => {
                out.prefix = self.prefix;
                out.suffix = other.suffix;
                let (mut big, small) = if self.interior.len() >= other.interior.len() {
                    (self.interior, other.interior)
                } else {
                    (other.interior, self.interior)
                };
                for (i, c) in small.iter().enumerate() {
                    big[i] += c;
                }
                out.interior = big;
                bump(&mut out.interior, self.suffix + other.prefix);
            }
        }
        out
    }

    fn finish(self) -> (Vec<u64>, u64, u64) {
        let all = self.all_success();
        let mut hist = self.interior;
        if all {
            bump(&mut hist, self.len);
        } else {
            bump(&mut hist, self.prefix);
            bump(&mut hist, self.suffix);
        }
        (hist, self.len, self.successes)
    }
}

const BLOCK: u64 = 1 << 20;

fn run_blocks<F>(attempts: u64, f: F) -> StreamStats
where
    F: Fn(u64, u64) -> Block + Sync,
{
    let n_blocks = attempts.div_ceil(BLOCK);
    let blocks: Vec<Block> = (0..n_blocks)
        .into_par_iter()
        .map(|b| f(b, BLOCK.min(attempts - b * BLOCK)))
        .collect();
    let (histogram, attempts, successes) = blocks
        .into_iter()
        .fold(Block::default(), Block::merge)
        .finish();
    StreamStats {
        histogram,
        attempts,
        successes,
        rep_rate_khz: None,
        duty_cycle: None,
    }
}

fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Maximal-run histogram of `attempts` independent trials with success
/// probability `eta`. Blocks of 2²⁰ attempts use independent RNG streams,
/// so the result depends only on `seed`.
pub fn count_streams(eta: f64, attempts: u64, seed: u64) -> Result<StreamStats> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::invalid("eta", format!("must lie in [0, 1], got {eta}")));
    }
    if attempts == 0 {
        return Err(Error::EmptyInput("attempts"));
    }
    // success iff next_u64 < threshold; eta = 1 is handled separately
    let threshold = (eta * 2f64.powi(64)) as u64;
    Ok(run_blocks(attempts, |b, len| {
        if eta >= 1.0 {
            return Block::from_bits((0..len).map(|_| true));
        }
        let mut rng = block_rng(seed, b);
        Block::from_bits((0..len).map(|_| rng.next_u64() < threshold))
    }))
}

/// Slow mean-reverting fluctuation of the detection efficiency,
/// `η_k = clamp(η·(1 + x_k))` with `x` an AR(1) process of stationary
/// standard deviation `relative_sigma` and correlation length
/// `correlation_attempts`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuModulation {
    pub relative_sigma: f64,
    pub correlation_attempts: f64,
}

/// Like [`count_streams`] with a fluctuating efficiency. Each block starts
/// from a fresh stationary draw, which is exact when the correlation
/// length is much shorter than a block.
pub fn count_streams_modulated(
    eta: f64,
    attempts: u64,
    modulation: OuModulation,
    seed: u64,
) -> Result<StreamStats> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::invalid("eta", format!("must lie in [0, 1], got {eta}")));
    }
    if attempts == 0 {
        return Err(Error::EmptyInput("attempts"));
    }
    crate::error::ensure_nonnegative("relative_sigma", modulation.relative_sigma)?;
    crate::error::ensure_positive("correlation_attempts", modulation.correlation_attempts)?;
    let a = (-1.0 / modulation.correlation_attempts).exp();
    let kick = modulation.relative_sigma * (1.0 - a * a).sqrt();
    Ok(run_blocks(attempts, |b, len| {
        let mut rng = block_rng(seed, b);
        let z: f64 = StandardNormal.sample(&mut rng);
        let mut x = modulation.relative_sigma * z;
        Block::from_bits((0..len).map(|_| {
            let e = (eta * (1.0 + x)).clamp(0.0, 1.0);
            let s = rng.random::<f64>() < e;
            let z: f64 = StandardNormal.sample(&mut rng);
            x = a * x + kick * z;
            s
        }))
    }))
}

impl StreamStats {
    /// Success per generation pulse from a simulated stream: a pulse
    /// succeeds when it has at least one cavity emission.
    pub fn from_click_stream(stream: &ClickStream) -> Result<Self> {
        let per = stream.meta.pulses_per_trajectory as u64;
        let n = stream.meta.n_trajectories as u64;
        if per == 0 || n == 0 {
            return Err(Error::EmptyInput("click stream"));
        }
        let mut out = StreamStats {
            histogram: Vec::new(),
            attempts: 0,
            successes: 0,
            rep_rate_khz: None,
            duty_cycle: None,
        };
        let mut trajs = stream.by_trajectory().peekable();
        for t in 0..n {
            let mut hit = vec![false; per as usize];
            if trajs.peek().is_some_and(|recs| recs[0].traj as u64 == t) {
                for r in trajs.next().expect("peeked") {
                    if r.channel == ClickChannel::Emission {
                        hit[r.pulse as usize] = true;
                    }
                }
            }
            // runs never continue across trajectories
            let (h, len, s) = Block::from_bits(hit.into_iter()).finish();
            if out.histogram.len() < h.len() {
                out.histogram.resize(h.len(), 0);
            }
            for (i, c) in h.into_iter().enumerate() {
                out.histogram[i] += c;
            }
            out.attempts += len;
            out.successes += s;
        }
        Ok(out)
    }
}

/// Per-attempt efficiency from the geometric decay of the run histogram,
/// using runs of length `1..=n_max` with nonzero counts.
pub fn fit_stream_efficiency(stats: &StreamStats, n_max: usize) -> Result<DecayFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = (1..=n_max.min(stats.n_max()))
        .filter(|&n| stats.count(n) > 0)
        .map(|n| (n as f64, stats.count(n) as f64))
        .unzip();
    fit_exponential_decay(&xs, &ys, DecayModel::Geometric, Weights::Poisson)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(bits: &[bool]) -> Vec<u64> {
        let mut h = Vec::new();
        let mut run = 0;
        for &b in bits.iter().chain(std::iter::once(&false)) {
            if b {
                run += 1;
            } else {
                bump(&mut h, run);
                run = 0;
            }
        }
        h
    }

    #[test]
    fn merge_matches_direct_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.random_range(1..60);
            let p: f64 = rng.random();
            let bits: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < p).collect();
            let cut1 = rng.random_range(0..=n);
            let cut2 = rng.random_range(cut1..=n);
            let parts = [&bits[..cut1], &bits[cut1..cut2], &bits[cut2..]];
            let merged = parts
                .iter()
                .map(|s| Block::from_bits(s.iter().copied()))
                .fold(Block::default(), Block::merge);
            let (h, len, _) = merged.finish();
            assert_eq!(len, n as u64);
            let mut want = brute(&bits);
            let mut got = h;
            while want.last() == Some(&0) {
                want.pop();
            }
            while got.last() == Some(&0) {
                got.pop();
            }
            assert_eq!(got, want, "{bits:?}");
        }
    }

    #[test]
    fn certain_success_is_one_run() {
        let s = count_streams(1.0, 12345, 0).unwrap();
        assert_eq!(s.count(12345), 1);
        assert_eq!(s.histogram.iter().sum::<u64>(), 1);
        let s = count_streams(0.0, 1000, 0).unwrap();
        assert!(s.histogram.iter().all(|&c| c == 0));
    }
}
