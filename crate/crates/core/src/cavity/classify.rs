use serde::{Deserialize, Serialize};

use super::fit::FitParams;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CouplingClass {
    Overcoupled,
    Critical,
    Undercoupled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingEvidence {
    pub class: CouplingClass,
    /// Minimum of the empty-cavity reflection, `((κ_s−κ_w)/κ_tot)²`.
    pub bare_minimum: f64,
    /// Minimum of the reflection with the emitter present.
    pub emitter_minimum: f64,
    pub emitter_dips_below_bare: bool,
    /// `(ω_a − ω_c, min R)` as the emitter is tuned across the cavity.
    pub dip_vs_detuning: Vec<(f64, f64)>,
}

/// `|κ_w − κ_s|` below this fraction of `κ_tot` counts as critical.
const CRITICAL_TOLERANCE: f64 = 0.01;

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| a + (b - a) * k as f64 / (n - 1) as f64)
}

/// Global minimum of the reflection: a coarse scan over the cavity line
/// and a fine one over the emitter feature, then golden-section polish.
pub(crate) fn reflection_minimum(p: &FitParams) -> f64 {
    let feature = p.gamma + 4.0 * p.g * p.g / p.kappa_tot;
    let coarse = linspace(p.omega_c - 5.0 * p.kappa_tot, p.omega_c + 5.0 * p.kappa_tot, 2001);
    let hw = (20.0 * feature).max(10.0 * p.gamma);
    let fine = linspace(p.omega_a - hw, p.omega_a + hw, 4001);
    let mut pts: Vec<f64> = coarse.chain(fine).collect();
    pts.sort_by(|a, b| a.total_cmp(b));
    let (i, _) = pts
        .iter()
        .map(|&w| p.reflection(w))
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty grid");
    let mut a = pts[i.saturating_sub(1)];
    let mut b = pts[(i + 1).min(pts.len() - 1)];
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let x1 = b - phi * (b - a);
        let x2 = a + phi * (b - a);
        if p.reflection(x1) < p.reflection(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    p.reflection(0.5 * (a + b)).min(p.reflection(pts[i]))
}

/// Classifies the waveguide coupling of fitted parameters. The emitter can
/// only pull the reflection below the empty-cavity minimum when the cavity
/// is overcoupled, which is reported as independent evidence.
pub fn classify_coupling(fit: &FitParams) -> Result<CouplingEvidence> {
    crate::error::ensure_positive("kappa_tot", fit.kappa_tot)?;
    crate::error::ensure_positive("gamma", fit.gamma)?;
    crate::error::ensure_nonnegative("kappa_w", fit.kappa_w)?;
    let kappa_s = fit.kappa_s();
    let diff = fit.kappa_w - kappa_s;
    let class = if diff.abs() <= CRITICAL_TOLERANCE * fit.kappa_tot {
        CouplingClass::Critical
    } else if diff > 0.0 {
        CouplingClass::Overcoupled
    } else {
        CouplingClass::Undercoupled
    };
    let bare_minimum = (diff / fit.kappa_tot).powi(2);
    let emitter_minimum = reflection_minimum(fit);
    let dip_vs_detuning = linspace(-2.0 * fit.kappa_tot, 2.0 * fit.kappa_tot, 41)
        .map(|d| {
            let q = FitParams {
                omega_a: fit.omega_c + d,
                ..*fit
            };
            (d, reflection_minimum(&q))
        })
        .collect();
    Ok(CouplingEvidence {
        class,
        bare_minimum,
        emitter_minimum,
        emitter_dips_below_bare: emitter_minimum < bare_minimum * (1.0 - 1e-6) - 1e-12,
        dip_vs_detuning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::CqedParams;

    #[test]
    fn reference_device_is_overcoupled() {
        let p = FitParams::from_cqed(&CqedParams::reference(), 0.0);
        let e = classify_coupling(&p).unwrap();
        assert_eq!(e.class, CouplingClass::Overcoupled);
        assert!(e.emitter_dips_below_bare, "{} vs {}", e.emitter_minimum, e.bare_minimum);

        let swapped = FitParams {
            kappa_w: p.kappa_s(),
            ..p
        };
        let e = classify_coupling(&swapped).unwrap();
        assert_eq!(e.class, CouplingClass::Undercoupled);
        assert!(!e.emitter_dips_below_bare);
        assert!(e.dip_vs_detuning.iter().all(|&(_, r)| r >= e.bare_minimum - 1e-9));
    }

    #[test]
    fn critical_band() {
        let p = FitParams {
            g: 5.0,
            kappa_tot: 200.0,
            kappa_w: 100.5,
            gamma: 0.1,
            omega_c: 0.0,
            omega_a: 10.0,
        };
        assert_eq!(classify_coupling(&p).unwrap().class, CouplingClass::Critical);
    }
}
