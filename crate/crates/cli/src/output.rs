//! Atomic file output and the run manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";
pub const SUMMARY: &str = "summary.txt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

/// A headline number reported in the summary and by `report`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Headline {
    pub name: String,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub tool_version: String,
    pub profile: String,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub duration_s: f64,
    pub outputs: Vec<OutputFile>,
    pub headlines: Vec<Headline>,
}

impl RunManifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Recomputes every output digest.
    pub fn verify(&self, dir: &Path) -> Result<()> {
        for out in &self.outputs {
            let path = dir.join(&out.file);
            let bytes = std::fs::read(&path)
                .with_context(|| format!("output {} listed in the manifest is missing", path.display()))?;
            let digest = hex::encode(Sha256::digest(&bytes));
            if digest != out.sha256 || bytes.len() as u64 != out.bytes {
                bail!("digest mismatch for {}: manifest {}, file {digest}", path.display(), out.sha256);
            }
        }
        Ok(())
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .context("output path has no file name")?;
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
    Ok(())
}

/// Comma-separated table. Column names carry their unit, e.g. `t_ns`.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// Collects outputs of one run and writes them into the output directory.
pub struct RunWriter {
    dir: PathBuf,
    outputs: Vec<OutputFile>,
    headlines: Vec<Headline>,
    summary: String,
}

impl RunWriter {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            outputs: Vec::new(),
            headlines: Vec::new(),
            summary: String::new(),
        })
    }

    pub fn file(&mut self, name: &str, contents: &str) -> Result<()> {
        write_atomic(&self.dir.join(name), contents.as_bytes())?;
        self.outputs.push(OutputFile {
            file: name.to_string(),
            sha256: hex::encode(Sha256::digest(contents.as_bytes())),
            bytes: contents.len() as u64,
        });
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
        self.file(name, &csv(header, rows))
    }

    pub fn line(&mut self, text: impl AsRef<str>) {
        self.summary.push_str(text.as_ref());
        self.summary.push('\n');
    }

    pub fn headline(&mut self, name: &str, value: f64, sigma: Option<f64>, unit: &str) {
        let _ = match sigma {
            Some(s) => writeln!(self.summary, "{name} = {value:.6} ± {s:.6} {unit}"),
            None => writeln!(self.summary, "{name} = {value:.6} {unit}"),
        };
        self.headlines.push(Headline {
            name: name.to_string(),
            value,
            sigma,
            unit: unit.to_string(),
        });
    }

    /// Writes the summary and the manifest. The summary holds no timing so
    /// that reruns are byte-identical.
    pub fn finish(mut self, mut manifest: RunManifest) -> Result<RunManifest> {
        let summary = std::mem::take(&mut self.summary);
        self.file(SUMMARY, &summary)?;
        manifest.outputs = self.outputs;
        manifest.headlines = self.headlines;
        let json = serde_json::to_string_pretty(&manifest)? + "\n";
        write_atomic(&self.dir.join(MANIFEST), json.as_bytes())?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_rows() {
        let s = csv(&["t_ns", "flux_per_ns"], vec![vec![0.0, 1.5], vec![1.0, 0.25]]);
        assert_eq!(s, "t_ns,flux_per_ns\n0,1.5\n1,0.25\n");
    }

    #[test]
    fn manifest_round_trip_and_tamper_detection() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = RunWriter::new(dir.path()).unwrap();
        w.csv("a.csv", &["x_ns"], vec![vec![1.0]]).unwrap();
        w.headline("x", 1.0, None, "ns");
        let m = RunManifest {
            experiment: "demo".into(),
            tool_version: "0".into(),
            profile: "p".into(),
            seed: None,
            config: serde_json::Value::Null,
            duration_s: 0.0,
            outputs: vec![],
            headlines: vec![],
        };
        let m = w.finish(m).unwrap();
        assert_eq!(m.outputs.len(), 2);
        let loaded = RunManifest::load(dir.path()).unwrap();
        assert_eq!(loaded, m);
        loaded.verify(dir.path()).unwrap();
        std::fs::write(dir.path().join("a.csv"), "x_ns\n2\n").unwrap();
        assert!(loaded.verify(dir.path()).is_err());
        assert!(!dir.path().join(".a.csv.tmp").exists());
    }
}
