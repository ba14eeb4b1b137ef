use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClickChannel {
    /// Photon emitted through the cavity.
    Emission,
    /// Photon lost to free space.
    Loss,
}

impl ClickChannel {
    fn as_str(self) -> &'static str {
        match self {
            ClickChannel::Emission => "emission",
            ClickChannel::Loss => "loss",
        }
    }
}

/// Nuclear-state dependent emission frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreqLabel {
    Up,
    Down,
}

impl FreqLabel {
    pub fn flipped(self) -> Self {
        match self {
            FreqLabel::Up => FreqLabel::Down,
            FreqLabel::Down => FreqLabel::Up,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            FreqLabel::Up => "up",
            FreqLabel::Down => "down",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClickRecord {
    pub traj: u32,
    pub pulse: u32,
    pub t_ns: f64,
    pub channel: ClickChannel,
    pub freq: Option<FreqLabel>,
}

/// Shape of the experiment that produced a stream; needed to normalize
/// pulsed correlations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamMeta {
    pub n_trajectories: usize,
    pub pulses_per_trajectory: usize,
    pub pulse_spacing_ns: f64,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Free-form description of the generating configuration.
    #[serde(default)]
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClickStream {
    pub meta: StreamMeta,
    /// Sorted by trajectory, then time.
    pub records: Vec<ClickRecord>,
}

const HEADER: &str = "traj,pulse,t_ns,channel,freq_label";

impl ClickStream {
    pub fn new(meta: StreamMeta, records: Vec<ClickRecord>) -> Result<Self> {
        for w in records.windows(2) {
            let ordered = w[0].traj < w[1].traj || (w[0].traj == w[1].traj && w[0].t_ns <= w[1].t_ns);
            if !ordered {
                return Err(Error::invalid(
                    "click stream",
                    "records must be sorted by trajectory and time",
                ));
            }
        }
        for r in &records {
            if r.traj as usize >= meta.n_trajectories
                || r.pulse as usize >= meta.pulses_per_trajectory.max(1)
            {
                return Err(Error::invalid(
                    "click stream",
                    format!("record {r:?} outside the declared experiment shape"),
                ));
            }
        }
        Ok(Self { meta, records })
    }

    pub fn emissions(&self) -> impl Iterator<Item = &ClickRecord> {
        self.records
            .iter()
            .filter(|r| r.channel == ClickChannel::Emission)
    }

    pub fn total_pulses(&self) -> usize {
        self.meta.n_trajectories * self.meta.pulses_per_trajectory
    }

    /// Emission records per pulse, averaged over all pulses.
    pub fn mean_emissions_per_pulse(&self) -> f64 {
        self.emissions().count() as f64 / self.total_pulses().max(1) as f64
    }

    /// Records grouped by trajectory (contiguous slices).
    pub fn by_trajectory(&self) -> impl Iterator<Item = &[ClickRecord]> {
        self.records.chunk_by(|a, b| a.traj == b.traj)
    }

    pub fn write_records<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e: std::io::Error| Error::Parse(e.to_string());
        writeln!(w, "{HEADER}").map_err(io)?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.traj,
                r.pulse,
                r.t_ns,
                r.channel.as_str(),
                r.freq.map(FreqLabel::as_str).unwrap_or("")
            )
            .map_err(io)?;
        }
        Ok(())
    }

    pub fn write_sidecar<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, &self.meta).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn read<R: BufRead, S: std::io::Read>(records: R, sidecar: S) -> Result<Self> {
        let meta: StreamMeta =
            serde_json::from_reader(sidecar).map_err(|e| Error::Parse(e.to_string()))?;
        let mut out = Vec::new();
        for (i, line) in records.lines().enumerate() {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || (i == 0 && line == HEADER) {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            let bad = |what: &str| Error::Parse(format!("line {}: {what}", i + 1));
            if f.len() != 5 {
                return Err(bad("expected 5 fields"));
            }
            out.push(ClickRecord {
                traj: f[0].parse().map_err(|_| bad("trajectory id"))?,
                pulse: f[1].parse().map_err(|_| bad("pulse index"))?,
                t_ns: f[2].parse().map_err(|_| bad("time"))?,
                channel: match f[3] {
                    "emission" => ClickChannel::Emission,
                    "loss" => ClickChannel::Loss,
                    _ => return Err(bad("channel")),
                },
                freq: match f[4] {
                    "" => None,
                    "up" => Some(FreqLabel::Up),
                    "down" => Some(FreqLabel::Down),
                    _ => return Err(bad("frequency label")),
                },
            });
        }
        Self::new(meta, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> StreamMeta {
        StreamMeta {
            n_trajectories: 2,
            pulses_per_trajectory: 3,
            pulse_spacing_ns: 10.0,
            seed: Some(7),
            config: serde_json::Value::Null,
        }
    }

    #[test]
    fn persistence_round_trip() {
        let s = ClickStream::new(
            meta(),
            vec![
                ClickRecord {
                    traj: 0,
                    pulse: 0,
                    t_ns: 1.25,
                    channel: ClickChannel::Emission,
                    freq: None,
                },
                ClickRecord {
                    traj: 1,
                    pulse: 2,
                    t_ns: 21.0,
                    channel: ClickChannel::Loss,
                    freq: Some(FreqLabel::Down),
                },
            ],
        )
        .unwrap();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        s.write_records(&mut a).unwrap();
        s.write_sidecar(&mut b).unwrap();
        let back = ClickStream::read(a.as_slice(), b.as_slice()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn rejects_unsorted_or_out_of_range() {
        let rec = |traj, t_ns| ClickRecord {
            traj,
            pulse: 0,
            t_ns,
            channel: ClickChannel::Emission,
            freq: None,
        };
        assert!(ClickStream::new(meta(), vec![rec(0, 2.0), rec(0, 1.0)]).is_err());
        assert!(ClickStream::new(meta(), vec![rec(5, 2.0)]).is_err());
    }
}
