//! Summary table over a set of finished runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};

use crate::output::{RunManifest, MANIFEST};

/// Accepts a run directory or a path to its manifest.
fn run_dir(path: &Path) -> PathBuf {
    if path.file_name().is_some_and(|n| n == MANIFEST) {
        path.parent().map(Path::to_path_buf).unwrap_or_default()
    } else {
        path.to_path_buf()
    }
}

fn format_value(v: f64, sigma: Option<f64>) -> String {
    match sigma {
        Some(s) if s.is_finite() => format!("{v:.6} ± {s:.2e}"),
        _ => format!("{v:.6}"),
    }
}

/// Verifies every manifest and renders one row per run. The
/// provenance column names the seed, tool version and a short digest of
/// the config snapshot.
pub fn emit_report(paths: &[PathBuf]) -> Result<String> {
    if paths.is_empty() {
        bail!("report needs at least one run directory");
    }
    let mut rows = Vec::new();
    for p in paths {
        let dir = run_dir(p);
        let m = RunManifest::load(&dir)?;
        m.verify(&dir).with_context(|| format!("verifying {}", dir.display()))?;
        let config = serde_json::to_vec(&m.config)?;
        let tag = format!(
            "v{} seed={} config={}",
            m.tool_version,
            m.seed.map(|s| s.to_string()).unwrap_or_else(|| "-".into()),
            &hex::encode(Sha256::digest(&config))[..12]
        );
        let values: Vec<String> = m
            .headlines
            .iter()
            .map(|h| {
                let unit = if h.unit.is_empty() { String::new() } else { format!(" {}", h.unit) };
                format!("{} = {}{unit}", h.name, format_value(h.value, h.sigma))
            })
            .collect();
        rows.push([m.experiment.clone(), tag, values.join("; ")]);
    }
    let header = ["experiment", "provenance", "headline numbers"];
    let mut widths = header.map(|h| h.chars().count());
    for r in &rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        let _ = writeln!(out, "{}", padded.join("  ").trim_end());
    };
    line(&header.map(String::from));
    line(&widths.map(|w| "-".repeat(w)));
    for r in &rows {
        line(r);
    }
    Ok(out)
}
