//! Two-column text exchange format: one header line naming the columns,
//! then whitespace- or comma-separated numeric rows. `#` starts a comment.

use std::io::{BufRead, Write};

use super::{PhotonWaveform, PulseEnvelope};
use crate::{Error, Result, C64};

pub fn write_columns<W: Write>(mut w: W, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let io = |e: std::io::Error| Error::Parse(e.to_string());
    writeln!(w, "{}", header.join(" ")).map_err(io)?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", line.join(" ")).map_err(io)?;
    }
    Ok(())
}

/// Returns the header columns and the numeric rows.
pub fn read_columns<R: BufRead>(r: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut header = None;
    let mut rows = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse(e.to_string()))?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        if header.is_none() {
            header = Some(fields.iter().map(|s| s.to_string()).collect::<Vec<_>>());
            continue;
        }
        let row = fields
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("line {}: bad number {s:?}", lineno + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let header = header.ok_or(Error::EmptyInput("text table"))?;
    for (i, row) in rows.iter().enumerate() {
        if row.len() != header.len() {
            return Err(Error::Parse(format!(
                "row {} has {} columns, header has {}",
                i + 1,
                row.len(),
                header.len()
            )));
        }
    }
    Ok((header, rows))
}

impl PulseEnvelope {
    /// Writes `t_ns omega_ghz`, adding `omega_im_ghz` only for complex drives.
    pub fn write_text<W: Write>(&self, w: W) -> Result<()> {
        let complex = self.values().iter().any(|v| v.im != 0.0);
        let rows: Vec<Vec<f64>> = self
            .times()
            .iter()
            .zip(self.values())
            .map(|(&t, v)| {
                if complex {
                    vec![t, v.re, v.im]
                } else {
                    vec![t, v.re]
                }
            })
            .collect();
        let header: &[&str] = if complex {
            &["t_ns", "omega_ghz", "omega_im_ghz"]
        } else {
            &["t_ns", "omega_ghz"]
        };
        write_columns(w, header, &rows)
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let (header, rows) = read_columns(r)?;
        if header.len() != 2 && header.len() != 3 {
            return Err(Error::Parse("pulse file needs 2 or 3 columns".into()));
        }
        let times = rows.iter().map(|r| r[0]).collect();
        let values = rows
            .iter()
            .map(|r| C64::new(r[1], r.get(2).copied().unwrap_or(0.0)))
            .collect();
        PulseEnvelope::tabulated(times, values)
    }
}

impl PhotonWaveform {
    pub fn write_text<W: Write>(&self, w: W) -> Result<()> {
        let rows: Vec<Vec<f64>> = self
            .times()
            .iter()
            .zip(self.flux())
            .map(|(&t, &f)| vec![t, f])
            .collect();
        write_columns(w, &["t_ns", "flux_per_ns"], &rows)
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let (header, rows) = read_columns(r)?;
        if header.len() != 2 {
            return Err(Error::Parse("waveform file needs 2 columns".into()));
        }
        PhotonWaveform::new(rows.iter().map(|r| r[0]).collect(), rows.iter().map(|r| r[1]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_round_trip() {
        let p = PulseEnvelope::tabulated_real(vec![0.0, 0.5, 1.25], &[0.0, 0.1, 1.0 / 3.0]).unwrap();
        let mut buf = Vec::new();
        p.write_text(&mut buf).unwrap();
        let q = PulseEnvelope::read_text(buf.as_slice()).unwrap();
        assert_eq!(p.times(), q.times());
        assert_eq!(p.values(), q.values());
    }

    #[test]
    fn malformed_rows_are_rejected() {
        let text = "t_ns omega\n0 1\n1 x\n";
        assert!(PulseEnvelope::read_text(text.as_bytes()).is_err());
        let text = "t_ns,flux\n0,1\n1\n";
        assert!(PhotonWaveform::read_text(text.as_bytes()).is_err());
    }
}
