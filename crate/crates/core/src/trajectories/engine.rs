//! Waiting-time quantum-jump unraveling.
//!
//! Every collapse operator maps a basis state to a basis state, and the
//! no-jump generator `H − (i/2)ΣL†L` is block diagonal in
//! `A = {|↑,0⟩, |↓′,0⟩, |↓,1⟩}` and `B = {|↓,0⟩, |↑′,0⟩}`. After any jump the
//! state is a basis vector, so a trajectory always lives in one block and is
//! propagated with precomputed 3×3 step propagators (block B is padded with
//! a decoupled third level).

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{PulseRole, TrajectoryConfig};
use super::stream::{ClickChannel, ClickRecord, ClickStream, StreamMeta};
use crate::dynamics::{build_collapse_operators, BasisLabel, Channel, CqedParams, TWO_PI};
use crate::{Result, C64};

type Vec3 = Vector3<C64>;
type Mat3 = Matrix3<C64>;

const BLOCK_A: usize = 0;
const BLOCK_B: usize = 1;

fn locate(label: BasisLabel) -> (usize, usize) {
    match label {
        BasisLabel::Up0 => (BLOCK_A, 0),
        BasisLabel::DownPrime0 => (BLOCK_A, 1),
        BasisLabel::Down1 => (BLOCK_A, 2),
        BasisLabel::Down0 => (BLOCK_B, 0),
        BasisLabel::UpPrime0 => (BLOCK_B, 1),
    }
}

const BLOCK_LABELS: [[Option<BasisLabel>; 3]; 2] = [
    [
        Some(BasisLabel::Up0),
        Some(BasisLabel::DownPrime0),
        Some(BasisLabel::Down1),
    ],
    [Some(BasisLabel::Down0), Some(BasisLabel::UpPrime0), None],
];

#[derive(Debug, Clone, Copy)]
struct Jump {
    from: (usize, usize),
    to: (usize, usize),
    rate: f64,
    record: Option<ClickChannel>,
}

struct Propagators {
    h: f64,
    n_steps: usize,
    /// `[block][step]` effective Hamiltonian at the step midpoint.
    heff: [Vec<Mat3>; 2],
    /// `[block][step]` full-step propagator.
    props: [Vec<Mat3>; 2],
    jumps: Vec<Jump>,
}

fn expm(heff: &Mat3, tau: f64) -> Mat3 {
    (heff * C64::new(0.0, -tau)).exp()
}

impl Propagators {
    fn new(params: &CqedParams, cfg: &TrajectoryConfig) -> Result<Self> {
        let n_steps = (cfg.period_ns / cfg.step_ns).round().max(1.0) as usize;
        let h = cfg.period_ns / n_steps as f64;
        let ops = build_collapse_operators(params, true)?;
        let jumps: Vec<Jump> = ops
            .iter()
            .filter(|op| op.rate > 0.0)
            .map(|op| Jump {
                from: locate(op.from),
                to: locate(op.to),
                rate: op.rate,
                record: match op.channel {
                    Channel::CavityEmission => Some(ClickChannel::Emission),
                    Channel::FreeSpace | Channel::Repump => Some(ClickChannel::Loss),
                    Channel::SpinRelaxation => None,
                },
            })
            .collect();

        let mut base = [Mat3::zeros(), Mat3::zeros()];
        base[BLOCK_A][(1, 1)] = C64::new(TWO_PI * params.delta, 0.0);
        base[BLOCK_A][(2, 2)] = C64::new(TWO_PI * (params.delta - params.delta_c), 0.0);
        base[BLOCK_A][(1, 2)] = C64::new(TWO_PI * params.g, 0.0);
        base[BLOCK_A][(2, 1)] = C64::new(TWO_PI * params.g, 0.0);
        for j in &jumps {
            let (b, i) = j.from;
            base[b][(i, i)] -= C64::new(0.0, 0.5 * j.rate);
        }

        let mut heff = [Vec::with_capacity(n_steps), Vec::with_capacity(n_steps)];
        let mut props = [Vec::with_capacity(n_steps), Vec::with_capacity(n_steps)];
        for k in 0..n_steps {
            let t = (k as f64 + 0.5) * h;
            let mut gen = C64::new(0.0, 0.0);
            let mut re = C64::new(0.0, 0.0);
            for p in &cfg.pulse_sequence {
                match p.role {
                    PulseRole::Generate => gen += p.envelope.eval(t),
                    PulseRole::Reinitialize => re += p.envelope.eval(t),
                }
            }
            let mut a = base[BLOCK_A];
            a[(1, 0)] = gen * TWO_PI;
            a[(0, 1)] = gen.conj() * TWO_PI;
            let mut b = base[BLOCK_B];
            b[(1, 0)] = re * TWO_PI;
            b[(0, 1)] = re.conj() * TWO_PI;
            props[BLOCK_A].push(expm(&a, h));
            props[BLOCK_B].push(expm(&b, h));
            heff[BLOCK_A].push(a);
            heff[BLOCK_B].push(b);
        }
        Ok(Self {
            h,
            n_steps,
            heff,
            props,
            jumps,
        })
    }
}

fn norm2(v: &Vec3) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

fn basis(i: usize) -> Vec3 {
    let mut v = Vec3::zeros();
    v[i] = C64::new(1.0, 0.0);
    v
}

/// Trajectory-averaged basis populations at the checkpoint times of the
/// first period.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationCheckpoints {
    /// Step boundaries nearest to the requested times (ns).
    pub times: Vec<f64>,
    /// `mean[c][BasisLabel::index()]`.
    pub mean: Vec<[f64; 5]>,
}

struct Outcome {
    records: Vec<ClickRecord>,
    populations: Vec<[f64; 5]>,
}

fn run_one(
    props: &Propagators,
    cfg: &TrajectoryConfig,
    centers: &[f64],
    traj: usize,
    checkpoint_steps: &[usize],
) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(traj as u64);
    let mut block = BLOCK_A;
    let mut psi = basis(0);
    let mut threshold: f64 = rng.random();
    let mut records = Vec::new();
    let mut populations = Vec::with_capacity(checkpoint_steps.len());
    let mut next_checkpoint = 0;
    let h = props.h;
    for rep in 0..cfg.repetitions {
        let t_rep = rep as f64 * cfg.period_ns;
        for k in 0..props.n_steps {
            let mut done = 0.0;
            loop {
                let remaining = h - done;
                let end = if done == 0.0 {
                    props.props[block][k] * psi
                } else {
                    expm(&props.heff[block][k], remaining) * psi
                };
                if norm2(&end) >= threshold {
                    psi = end;
                    break;
                }
                // Bisection for the threshold crossing inside the step.
                let heff = &props.heff[block][k];
                let (mut lo, mut hi) = (0.0, remaining);
                while hi - lo > cfg.resolution_ns {
                    let mid = 0.5 * (lo + hi);
                    if norm2(&(expm(heff, mid) * psi)) >= threshold {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let tau = 0.5 * (lo + hi);
                let at = expm(heff, tau) * psi;
                let weights: Vec<f64> = props
                    .jumps
                    .iter()
                    .map(|j| {
                        if j.from.0 == block {
                            j.rate * at[j.from.1].norm_sqr()
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let total: f64 = weights.iter().sum();
                done += tau;
                threshold = rng.random();
                if total <= 0.0 {
                    // Threshold crossed by round-off alone; keep the state.
                    psi = at / C64::new(norm2(&at).sqrt(), 0.0);
                    continue;
                }
                let mut u = rng.random::<f64>() * total;
                let mut chosen = props.jumps.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    if u < *w {
                        chosen = i;
                        break;
                    }
                    u -= w;
                }
                let jump = props.jumps[chosen];
                if let Some(channel) = jump.record {
                    let t_local = k as f64 * h + done;
                    let nearest = centers
                        .iter()
                        .enumerate()
                        .min_by(|a, b| (a.1 - t_local).abs().total_cmp(&(b.1 - t_local).abs()))
                        .map(|(i, _)| i)
                        .unwrap_or(0);
                    records.push(ClickRecord {
                        traj: traj as u32,
                        pulse: (rep * centers.len() + nearest) as u32,
                        t_ns: t_rep + t_local,
                        channel,
                        freq: None,
                    });
                }
                block = jump.to.0;
                psi = basis(jump.to.1);
            }
            if rep == 0 {
                while next_checkpoint < checkpoint_steps.len()
                    && checkpoint_steps[next_checkpoint] == k + 1
                {
                    let n = norm2(&psi);
                    let mut pops = [0.0; 5];
                    for (i, label) in BLOCK_LABELS[block].iter().enumerate() {
                        if let Some(l) = label {
                            pops[l.index()] = psi[i].norm_sqr() / n;
                        }
                    }
                    populations.push(pops);
                    next_checkpoint += 1;
                }
            }
        }
    }
    Outcome {
        records,
        populations,
    }
}

fn run(
    params: &CqedParams,
    config: &TrajectoryConfig,
    checkpoints: &[f64],
) -> Result<(ClickStream, PopulationCheckpoints)> {
    params.validate()?;
    config.validate()?;
    let props = Propagators::new(params, config)?;
    let centers = config.generation_centers();
    let mut steps: Vec<usize> = checkpoints
        .iter()
        .map(|&t| ((t / props.h).round() as usize).clamp(1, props.n_steps))
        .collect();
    steps.sort_unstable();
    let outcomes: Vec<Outcome> = (0..config.n_trajectories)
        .into_par_iter()
        .map(|i| run_one(&props, config, &centers, i, &steps))
        .collect();
    let mut mean = vec![[0.0; 5]; steps.len()];
    let mut records = Vec::new();
    for o in outcomes {
        for (m, p) in mean.iter_mut().zip(&o.populations) {
            for i in 0..5 {
                m[i] += p[i];
            }
        }
        records.extend(o.records);
    }
    let n = config.n_trajectories as f64;
    for m in mean.iter_mut() {
        m.iter_mut().for_each(|x| *x /= n);
    }
    let meta = StreamMeta {
        n_trajectories: config.n_trajectories,
        pulses_per_trajectory: config.pulses_per_trajectory(),
        pulse_spacing_ns: config.pulse_spacing_ns(),
        seed: Some(config.seed),
        config: serde_json::json!({
            "period_ns": config.period_ns,
            "repetitions": config.repetitions,
            "resolution_ns": config.resolution_ns,
            "step_ns": config.step_ns,
            "gamma_t_ghz": params.gamma_t,
        }),
    };
    let stream = ClickStream::new(meta, records)?;
    let checkpoints = PopulationCheckpoints {
        times: steps.iter().map(|&s| s as f64 * props.h).collect(),
        mean,
    };
    Ok((stream, checkpoints))
}

/// Runs `n_trajectories` independent jump trajectories. Trajectory `i`
/// draws from a ChaCha8 stream keyed by `(seed, i)`, so results do not
/// depend on thread count or scheduling.
pub fn run_trajectories(params: &CqedParams, config: &TrajectoryConfig) -> Result<ClickStream> {
    Ok(run(params, config, &[])?.0)
}

/// As [`run_trajectories`], also averaging basis populations at the given
/// times within the first period.
pub fn run_trajectories_with_populations(
    params: &CqedParams,
    config: &TrajectoryConfig,
    checkpoints: &[f64],
) -> Result<(ClickStream, PopulationCheckpoints)> {
    run(params, config, checkpoints)
}
