//! One-dimensional quasipotential model of a photonic-crystal cavity.
//!
//! Each mirror cell is a barrier whose height is the detuning of the mode
//! from that cell's dielectric band edge; the defect region is a well.
//! The mode solves `−c ψ'' + U ψ = E ψ` with outgoing waves in the leads,
//! so `E` is complex and `Im E` sets the loaded Q. The leakage is split
//! left/right by the outgoing lead fluxes.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// Band-edge detuning in THz; negative inside the defect well.
    pub height_thz: f64,
    pub width_nm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasipotentialProfile {
    /// Left to right. The right side faces the collection waveguide.
    pub segments: Vec<Segment>,
    /// Potential in both leads; defaults to the bottom of the well.
    #[serde(default)]
    pub lead_height_thz: Option<f64>,
}

/// Segment index ranges of the left mirror, well and right mirror.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProfileParts {
    pub well_start: usize,
    pub well_end: usize,
}

impl QuasipotentialProfile {
    /// Uniform mirrors around a single-segment well.
    pub fn cavity(
        left: (usize, f64),
        right: (usize, f64),
        cell_nm: f64,
        well_depth_thz: f64,
        well_width_nm: f64,
    ) -> Self {
        let cell = |h: f64| Segment {
            height_thz: h,
            width_nm: cell_nm,
        };
        let mut segments = vec![cell(left.1); left.0];
        segments.push(Segment {
            height_thz: -well_depth_thz.abs(),
            width_nm: well_width_nm,
        });
        segments.extend(vec![cell(right.1); right.0]);
        Self {
            segments,
            lead_height_thz: None,
        }
    }

    /// Seven cells of 16 THz on both sides of a 20 THz, 500 nm well.
    pub fn symmetric_reference() -> Self {
        Self::cavity((7, 16.0), (7, 16.0), 260.0, 20.0, 500.0)
    }

    pub fn validate(&self) -> Result<ProfileParts> {
        if self.segments.is_empty() {
            return Err(Error::EmptyInput("quasipotential profile"));
        }
        for s in &self.segments {
            if !(s.width_nm.is_finite() && s.width_nm > 0.0) {
                return Err(Error::invalid("width_nm", format!("must be > 0, got {}", s.width_nm)));
            }
            if !s.height_thz.is_finite() {
                return Err(Error::NonFinite("height_thz"));
            }
        }
        let neg: Vec<usize> = (0..self.segments.len())
            .filter(|&i| self.segments[i].height_thz < 0.0)
            .collect();
        let (Some(&a), Some(&b)) = (neg.first(), neg.last()) else {
            return Err(Error::invalid("segments", "no well (negative height) found"));
        };
        if b - a + 1 != neg.len() {
            return Err(Error::invalid("segments", "the well must be one contiguous region"));
        }
        if a == 0 || b + 1 == self.segments.len() {
            return Err(Error::invalid("segments", "the well needs a mirror on each side"));
        }
        if let Some(l) = self.lead_height_thz {
            if !l.is_finite() {
                return Err(Error::NonFinite("lead_height_thz"));
            }
        }
        Ok(ProfileParts {
            well_start: a,
            well_end: b + 1,
        })
    }

    pub fn lead_height(&self) -> f64 {
        self.lead_height_thz.unwrap_or_else(|| {
            self.segments
                .iter()
                .map(|s| s.height_thz)
                .fold(f64::INFINITY, f64::min)
        })
    }

    pub fn left_cells(&self) -> Result<usize> {
        Ok(self.validate()?.well_start)
    }

    pub fn right_cells(&self) -> Result<usize> {
        Ok(self.segments.len() - self.validate()?.well_end)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }
}

/// Lattice constants of a tapered nanobeam, turned into a profile by
/// `height = f_mode·(1 − a_edge/a)`: longer cells push the dielectric band
/// edge further below the mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometrySpec {
    pub a_left_nm: f64,
    pub a_right_nm: f64,
    pub a_defect_nm: f64,
    pub a_edge_nm: f64,
    pub left_cells: usize,
    pub right_cells: usize,
    pub defect_cells: usize,
}

impl Default for GeometrySpec {
    fn default() -> Self {
        Self {
            a_left_nm: 272.0,
            a_right_nm: 250.0,
            a_defect_nm: 225.0,
            a_edge_nm: 240.0,
            left_cells: 6,
            right_cells: 5,
            defect_cells: 2,
        }
    }
}

impl GeometrySpec {
    pub fn profile(&self, mode_frequency_thz: f64) -> Result<QuasipotentialProfile> {
        for (n, a) in [
            ("a_left_nm", self.a_left_nm),
            ("a_right_nm", self.a_right_nm),
            ("a_defect_nm", self.a_defect_nm),
            ("a_edge_nm", self.a_edge_nm),
        ] {
            crate::error::ensure_positive(n, a)?;
        }
        let h = |a: f64| mode_frequency_thz * (1.0 - self.a_edge_nm / a);
        let seg = |a: f64| Segment {
            height_thz: h(a),
            width_nm: a,
        };
        let mut segments = vec![seg(self.a_left_nm); self.left_cells];
        segments.extend(vec![seg(self.a_defect_nm); self.defect_cells]);
        segments.extend(vec![seg(self.a_right_nm); self.right_cells]);
        let p = QuasipotentialProfile {
            segments,
            lead_height_thz: None,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasipotentialModel {
    /// `c` in `−c ψ''`, THz·nm².
    pub stiffness: f64,
    pub mode_frequency_thz: f64,
    pub wavelength_nm: f64,
    pub refractive_index: f64,
    /// Transverse mode area in units of `(λ/n)²`.
    pub transverse_area: f64,
    /// Out-of-plane scattering Q, not captured by the 1-D model.
    pub q_scat: f64,
}

impl Default for QuasipotentialModel {
    fn default() -> Self {
        Self {
            stiffness: DEFAULT_STIFFNESS,
            mode_frequency_thz: 406.7,
            wavelength_nm: 737.1,
            refractive_index: 2.4,
            transverse_area: 0.25,
            // f_mode/κ_s with κ_s = 89 GHz
            q_scat: 406.7e3 / 89.0,
        }
    }
}

/// Chosen so the symmetric reference profile has a loaded 1-D Q of 1e4.
pub const DEFAULT_STIFFNESS: f64 = 3.516436e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignScores {
    /// Complex mode eigenvalue `E` in THz.
    pub energy_re: f64,
    pub energy_im: f64,
    pub q_left: f64,
    pub q_right: f64,
    pub q_scat: f64,
    /// `(1/Q_left + 1/Q_right)⁻¹`
    pub q_wvg: f64,
    /// `(1/Q_wvg + 1/Q_scat)⁻¹`
    pub q_total: f64,
    /// Mode volume in `(λ/n)³`.
    pub v: f64,
    pub kappa_left_ghz: f64,
    pub kappa_right_ghz: f64,
}

fn k_of(e: C64, u: f64, c: f64) -> C64 {
    ((e - u) / c).sqrt()
}

/// Advances `(ψ, ψ')` across a flat segment.
fn step(psi: C64, dpsi: C64, k: C64, w: f64) -> (C64, C64) {
    let kw = k * w;
    let (s, co) = (kw.sin(), kw.cos());
    let sinc = if kw.norm() < 1e-8 { C64::new(w, 0.0) } else { s / k };
    (psi * co + dpsi * sinc, -psi * k * s + dpsi * co)
}

struct Solver<'a> {
    profile: &'a QuasipotentialProfile,
    c: f64,
    lead: f64,
}

impl Solver<'_> {
    fn sweep(&self, e: C64, psi0: C64, dpsi0: C64) -> (C64, C64) {
        let (mut p, mut d) = (psi0, dpsi0);
        for s in &self.profile.segments {
            (p, d) = step(p, d, k_of(e, s.height_thz, self.c), s.width_nm);
        }
        (p, d)
    }

    /// Incoming amplitude in the right lead for a purely outgoing left lead.
    fn outgoing_mismatch(&self, e: C64) -> C64 {
        let kl = k_of(e, self.lead, self.c);
        let kr = k_of(e, self.lead, self.c);
        let (p, d) = self.sweep(e, C64::new(1.0, 0.0), -C64::i() * kl);
        C64::i() * kr * p - d
    }

    /// Real bound-state condition with the outer mirrors extended to
    /// infinity, scaled to stay O(1).
    fn bound_mismatch(&self, e: f64) -> f64 {
        let segs = &self.profile.segments;
        let first = segs[0].height_thz;
        let last = segs[segs.len() - 1].height_thz;
        let al = ((first - e) / self.c).sqrt();
        let ar = ((last - e) / self.c).sqrt();
        let (p, d) = self.sweep(C64::new(e, 0.0), C64::new(1.0, 0.0), C64::new(al, 0.0));
        let v = d.re + ar * p.re;
        v / (p.re.abs() * ar + d.re.abs() + 1e-300)
    }

    fn bound_guess(&self) -> Result<f64> {
        let segs = &self.profile.segments;
        let lo = segs.iter().map(|s| s.height_thz).fold(f64::INFINITY, f64::min);
        let hi = segs[0].height_thz.min(segs[segs.len() - 1].height_thz);
        if !(hi > lo) {
            return Err(Error::NoBoundMode("outer mirrors are not above the well".into()));
        }
        let n = 4000;
        let eps = 1e-9 * (hi - lo);
        let at = |k: usize| lo + eps + (hi - lo - 2.0 * eps) * k as f64 / n as f64;
        let mut prev = (at(0), self.bound_mismatch(at(0)));
        for k in 1..=n {
            let e = at(k);
            let v = self.bound_mismatch(e);
            if prev.1.signum() != v.signum() {
                let (mut a, mut b) = (prev.0, e);
                let fa = prev.1;
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if (self.bound_mismatch(m) > 0.0) == (fa > 0.0) {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                // A pole of the scaled mismatch also flips sign; reject it.
                let m = 0.5 * (a + b);
                if self.bound_mismatch(m).abs() < 1e-3 {
                    return Ok(m);
                }
            }
            prev = (e, v);
        }
        Err(Error::NoBoundMode("no confined state below the outer mirrors".into()))
    }

    /// Complex secant iteration from the bound-state guess.
    fn resonance(&self) -> Result<C64> {
        let e0 = self.bound_guess()?;
        let scale = e0.abs().max(1.0);
        let mut x0 = C64::new(e0, 0.0);
        let mut x1 = C64::new(e0, -1e-4 * scale);
        let mut f0 = self.outgoing_mismatch(x0);
        let mut f1 = self.outgoing_mismatch(x1);
        for _ in 0..200 {
            let den = f1 - f0;
            if den.norm() == 0.0 {
                break;
            }
            let x2 = x1 - f1 * (x1 - x0) / den;
            if !(x2.re.is_finite() && x2.im.is_finite()) {
                break;
            }
            if (x2 - x1).norm() <= 1e-14 * scale {
                return if x2.im <= 0.0 {
                    Ok(x2)
                } else {
                    Err(Error::NoBoundMode("resonance with growing amplitude".into()))
                };
            }
            (x0, f0) = (x1, f1);
            x1 = x2;
            f1 = self.outgoing_mismatch(x1);
        }
        Err(Error::NoBoundMode("complex eigenvalue search did not converge".into()))
    }

    /// `∫|ψ|²/max|ψ|²` over the structure, by Simpson's rule per segment.
    fn effective_length(&self, e: C64) -> f64 {
        let kl = k_of(e, self.lead, self.c);
        let (mut p, mut d) = (C64::new(1.0, 0.0), -C64::i() * kl);
        let mut integral = 0.0;
        let mut peak: f64 = 0.0;
        let n = 64;
        for s in &self.profile.segments {
            let k = k_of(e, s.height_thz, self.c);
            let h = s.width_nm / n as f64;
            let mut acc = 0.0;
            for j in 0..=n {
                let (q, _) = step(p, d, k, h * j as f64);
                let v = q.norm_sqr();
                peak = peak.max(v);
                let wgt = if j == 0 || j == n {
                    1.0
                } else if j % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                acc += wgt * v;
            }
            integral += acc * h / 3.0;
            (p, d) = step(p, d, k, s.width_nm);
        }
        integral / peak
    }
}

/// Finds the fundamental quasi-bound mode of `profile` and scores it.
pub fn quasipotential_mode_solver(
    profile: &QuasipotentialProfile,
    model: &QuasipotentialModel,
) -> Result<DesignScores> {
    profile.validate()?;
    for (n, v) in [
        ("stiffness", model.stiffness),
        ("mode_frequency_thz", model.mode_frequency_thz),
        ("wavelength_nm", model.wavelength_nm),
        ("refractive_index", model.refractive_index),
        ("transverse_area", model.transverse_area),
        ("q_scat", model.q_scat),
    ] {
        crate::error::ensure_positive(n, v)?;
    }
    let solver = Solver {
        profile,
        c: model.stiffness,
        lead: profile.lead_height(),
    };
    let e = solver.resonance()?;
    if e.re <= solver.lead {
        return Err(Error::NoBoundMode("mode lies below the lead band edge".into()));
    }

    let k = k_of(e, solver.lead, solver.c);
    let (p, d) = solver.sweep(e, C64::new(1.0, 0.0), -C64::i() * k);
    let a_right = 0.5 * (p + d / (C64::i() * k));
    let flux_left = k.re;
    let flux_right = k.re * a_right.norm_sqr();
    let total = flux_left + flux_right;

    let q_wvg = model.mode_frequency_thz / (2.0 * e.im.abs());
    let q_left = q_wvg * total / flux_left;
    let q_right = q_wvg * total / flux_right;
    let q_total = 1.0 / (1.0 / q_wvg + 1.0 / model.q_scat);
    let lambda_n = model.wavelength_nm / model.refractive_index;
    let v = solver.effective_length(e) / lambda_n * model.transverse_area;
    Ok(DesignScores {
        energy_re: e.re,
        energy_im: e.im,
        q_left,
        q_right,
        q_scat: model.q_scat,
        q_wvg,
        q_total,
        v,
        kappa_left_ghz: 1e3 * model.mode_frequency_thz / q_left,
        kappa_right_ghz: 1e3 * model.mode_frequency_thz / q_right,
    })
}

/// `√((Q_scat/Q_wvg)(Q_left/Q_right)(Q·Q_scat/V²)·exp(−(λ0−λ)²/25))`, with
/// wavelengths in nm. Uses the stored fields as given.
pub fn design_fitness(scores: &DesignScores, lambda_nm: f64, lambda0_nm: f64) -> Result<f64> {
    for (n, v) in [
        ("q_scat", scores.q_scat),
        ("q_wvg", scores.q_wvg),
        ("q_left", scores.q_left),
        ("q_right", scores.q_right),
        ("q_total", scores.q_total),
        ("v", scores.v),
    ] {
        crate::error::ensure_positive(n, v)?;
    }
    if !(lambda_nm.is_finite() && lambda0_nm.is_finite()) {
        return Err(Error::NonFinite("wavelength"));
    }
    let d = lambda0_nm - lambda_nm;
    let f = (scores.q_scat / scores.q_wvg)
        * (scores.q_left / scores.q_right)
        * (scores.q_total * scores.q_scat / (scores.v * scores.v))
        * (-d * d / 25.0).exp();
    Ok(f.sqrt())
}

/// Q of one mirror per cell, a proxy for its barrier height.
pub fn effective_barrier_height(q_side: f64, cells: usize) -> Result<f64> {
    crate::error::ensure_positive("q_side", q_side)?;
    if cells == 0 {
        return Err(Error::invalid("cells", "must be > 0"));
    }
    Ok(q_side / cells as f64)
}

/// Uniform-mirror cavity family used by the scans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityTemplate {
    pub left_cells: usize,
    pub right_cells: usize,
    pub cell_nm: f64,
    pub well_depth_thz: f64,
    pub well_width_nm: f64,
}

impl Default for CavityTemplate {
    fn default() -> Self {
        Self {
            left_cells: 7,
            right_cells: 3,
            cell_nm: 260.0,
            well_depth_thz: 20.0,
            well_width_nm: 500.0,
        }
    }
}

impl CavityTemplate {
    pub fn profile(&self, left_height: f64, right_height: f64) -> QuasipotentialProfile {
        QuasipotentialProfile::cavity(
            (self.left_cells, left_height),
            (self.right_cells, right_height),
            self.cell_nm,
            self.well_depth_thz,
            self.well_width_nm,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub left_height_thz: f64,
    pub right_height_thz: f64,
    pub scores: DesignScores,
    /// `Q_right` per right-mirror cell.
    pub effective_barrier: f64,
}

fn scan_point(
    template: &CavityTemplate,
    model: &QuasipotentialModel,
    left: f64,
    right: f64,
) -> Result<ScanPoint> {
    let scores = quasipotential_mode_solver(&template.profile(left, right), model)?;
    Ok(ScanPoint {
        left_height_thz: left,
        right_height_thz: right,
        scores,
        effective_barrier: effective_barrier_height(scores.q_right, template.right_cells)?,
    })
}

/// Solves every `(left, right)` height pair; pairs without a confined
/// mode are dropped.
pub fn height_scan(
    template: &CavityTemplate,
    model: &QuasipotentialModel,
    pairs: &[(f64, f64)],
) -> Vec<ScanPoint> {
    pairs
        .iter()
        .filter_map(|&(l, r)| scan_point(template, model, l, r).ok())
        .collect()
}

/// Both mirrors raised together.
pub fn symmetric_height_scan(
    template: &CavityTemplate,
    model: &QuasipotentialModel,
    heights: &[f64],
) -> Vec<ScanPoint> {
    let pairs: Vec<_> = heights.iter().map(|&h| (h, h)).collect();
    height_scan(template, model, &pairs)
}

/// Points not dominated in (smaller V, smaller κ_left).
pub fn pareto_front(points: &[ScanPoint]) -> Vec<ScanPoint> {
    let dominated = |p: &ScanPoint| {
        points.iter().any(|q| {
            q.scores.v <= p.scores.v
                && q.scores.kappa_left_ghz <= p.scores.kappa_left_ghz
                && (q.scores.v < p.scores.v || q.scores.kappa_left_ghz < p.scores.kappa_left_ghz)
        })
    };
    let mut front: Vec<ScanPoint> = points.iter().copied().filter(|p| !dominated(p)).collect();
    front.sort_by(|a, b| a.scores.v.total_cmp(&b.scores.v));
    front
}

/// Right-mirror height giving `κ_right = target` for a fixed left height,
/// or for both mirrors together when `left` is `None`.
fn match_kappa_right(
    template: &CavityTemplate,
    model: &QuasipotentialModel,
    left: Option<f64>,
    target: f64,
    range: (f64, f64),
) -> Result<ScanPoint> {
    let eval = |h: f64| scan_point(template, model, left.unwrap_or(h), h);
    let (mut lo, mut hi) = range;
    let k_lo = eval(lo)?.scores.kappa_right_ghz;
    let k_hi = eval(hi)?.scores.kappa_right_ghz;
    if !(k_lo >= target && target >= k_hi) {
        return Err(Error::Infeasible(format!(
            "kappa_right {target} GHz outside [{k_hi}, {k_lo}] for this height range"
        )));
    }
    for _ in 0..60 {
        let m = 0.5 * (lo + hi);
        if eval(m)?.scores.kappa_right_ghz > target {
            lo = m;
        } else {
            hi = m;
        }
    }
    eval(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedComparison {
    pub target_kappa_right_ghz: f64,
    pub symmetric: ScanPoint,
    /// One matched design per left height that admits one.
    pub asymmetric: Vec<ScanPoint>,
    pub best_asymmetric: ScanPoint,
}

impl MatchedComparison {
    pub fn asymmetric_wins(&self) -> bool {
        self.best_asymmetric.scores.v < self.symmetric.scores.v
    }
}

/// At fixed waveguide coupling, compares the symmetric design against
/// designs whose left mirror is raised to each of `left_heights`.
pub fn matched_kappa_comparison(
    template: &CavityTemplate,
    model: &QuasipotentialModel,
    target_kappa_right_ghz: f64,
    height_range: (f64, f64),
    left_heights: &[f64],
) -> Result<MatchedComparison> {
    crate::error::ensure_positive("target_kappa_right_ghz", target_kappa_right_ghz)?;
    let symmetric =
        match_kappa_right(template, model, None, target_kappa_right_ghz, height_range)?;
    let asymmetric: Vec<ScanPoint> = left_heights
        .iter()
        .filter(|&&l| l > symmetric.right_height_thz)
        .filter_map(|&l| {
            match_kappa_right(template, model, Some(l), target_kappa_right_ghz, height_range).ok()
        })
        .collect();
    let best_asymmetric = asymmetric
        .iter()
        .copied()
        .min_by(|a, b| a.scores.v.total_cmp(&b.scores.v))
        .ok_or_else(|| Error::Infeasible("no asymmetric design matches the target".into()))?;
    Ok(MatchedComparison {
        target_kappa_right_ghz,
        symmetric,
        asymmetric,
        best_asymmetric,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(q_left: f64) -> DesignScores {
        DesignScores {
            energy_re: 0.0,
            energy_im: -0.01,
            q_left,
            q_right: 2000.0,
            q_scat: 4500.0,
            q_wvg: 1500.0,
            q_total: 1200.0,
            v: 0.5,
            kappa_left_ghz: 1.0,
            kappa_right_ghz: 200.0,
        }
    }

    #[test]
    fn reference_calibration() {
        let s = quasipotential_mode_solver(
            &QuasipotentialProfile::symmetric_reference(),
            &QuasipotentialModel::default(),
        )
        .unwrap();
        assert!((s.q_wvg / 1e4 - 1.0).abs() < 1e-3, "{}", s.q_wvg);
        assert!((s.q_left / s.q_right - 1.0).abs() < 1e-6);
        assert!((1.0 / s.q_wvg - 1.0 / s.q_left - 1.0 / s.q_right).abs() < 1e-12);
    }

    #[test]
    fn mirrored_profile_swaps_sides() {
        let m = QuasipotentialModel::default();
        let p = CavityTemplate::default().profile(18.0, 12.0);
        let mut q = p.clone();
        q.segments.reverse();
        let a = quasipotential_mode_solver(&p, &m).unwrap();
        let b = quasipotential_mode_solver(&q, &m).unwrap();
        assert!((a.q_left / b.q_right - 1.0).abs() < 1e-6);
        assert!((a.v / b.v - 1.0).abs() < 1e-6);
    }

    #[test]
    fn fitness_scaling() {
        let f1 = design_fitness(&scores(1e5), 737.0, 737.0).unwrap();
        let f2 = design_fitness(&scores(1e6), 737.0, 737.0).unwrap();
        assert!((f2 / f1 - 10f64.sqrt()).abs() < 1e-12);
        let off = design_fitness(&scores(1e5), 737.0, 742.0).unwrap();
        assert!((off / f1 - (-0.5f64).exp()).abs() < 1e-12);
        assert!(design_fitness(&DesignScores { v: 0.0, ..scores(1.0) }, 737.0, 737.0).is_err());
    }

    #[test]
    fn profile_validation() {
        let mut p = QuasipotentialProfile::symmetric_reference();
        p.segments[0].width_nm = 0.0;
        assert!(p.validate().is_err());
        let flat = QuasipotentialProfile {
            segments: vec![Segment { height_thz: 5.0, width_nm: 100.0 }; 3],
            lead_height_thz: None,
        };
        assert!(flat.validate().is_err());
        let json = QuasipotentialProfile::symmetric_reference().to_json().unwrap();
        let back = QuasipotentialProfile::from_json(&json).unwrap();
        assert_eq!(back, QuasipotentialProfile::symmetric_reference());
    }

    #[test]
    fn geometry_profile_is_asymmetric() {
        let g = GeometrySpec::default().profile(406.7).unwrap();
        let s = quasipotential_mode_solver(&g, &QuasipotentialModel::default()).unwrap();
        assert!(s.q_left > 100.0 * s.q_right);
        assert!(effective_barrier_height(s.q_right, 5).unwrap() > 0.0);
    }
}
