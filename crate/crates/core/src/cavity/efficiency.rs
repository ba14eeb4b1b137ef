use serde::{Deserialize, Serialize};

use crate::error::ensure_nonnegative;
use crate::{Error, Result};

/// Cavity decay split into the collected waveguide mode and everything else.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityCouplings {
    pub kappa_w: f64,
    /// Scattering plus decay through the unprobed mirror.
    pub kappa_s: f64,
}

impl CavityCouplings {
    pub fn new(kappa_w: f64, kappa_s: f64) -> Result<Self> {
        ensure_nonnegative("kappa_w", kappa_w)?;
        ensure_nonnegative("kappa_s", kappa_s)?;
        Ok(Self { kappa_w, kappa_s })
    }

    pub fn kappa_tot(&self) -> f64 {
        self.kappa_w + self.kappa_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceEfficiency {
    /// Probability of emitting into the cavity, `C/(C+1)`.
    pub p_c: f64,
    /// Probability that a cavity photon leaves through the waveguide.
    pub p_w: f64,
    /// Photon extraction efficiency into the waveguide.
    pub eta_s: f64,
}

/// `C = 4g²/(κ_tot γ)`.
pub fn cooperativity(g: f64, kappa_tot: f64, gamma: f64) -> Result<f64> {
    ensure_nonnegative("g", g)?;
    if !(kappa_tot > 0.0) || !(gamma > 0.0) {
        return Err(Error::invalid(
            "cooperativity",
            "kappa_tot and gamma must be positive",
        ));
    }
    Ok(4.0 * g * g / (kappa_tot * gamma))
}

/// `η_s = 4g²κ_w / ((κ_s+κ_w)(4g² + (κ_s+κ_w)γ))`, together with its
/// factors `p_c` and `p_w`.
pub fn source_efficiency(g: f64, kappa_w: f64, kappa_s: f64, gamma: f64) -> Result<SourceEfficiency> {
    ensure_nonnegative("g", g)?;
    ensure_nonnegative("kappa_w", kappa_w)?;
    ensure_nonnegative("kappa_s", kappa_s)?;
    if !(gamma > 0.0) {
        return Err(Error::invalid("gamma", "must be positive"));
    }
    let k = kappa_w + kappa_s;
    if k == 0.0 {
        return Ok(SourceEfficiency {
            p_c: 0.0,
            p_w: 0.0,
            eta_s: 0.0,
        });
    }
    let g2 = 4.0 * g * g;
    let p_c = g2 / (g2 + k * gamma);
    let p_w = kappa_w / k;
    let eta_s = g2 * kappa_w / (k * (g2 + k * gamma));
    Ok(SourceEfficiency { p_c, p_w, eta_s })
}

/// Waveguide coupling maximizing `η_s`, `√(κ_s(4g² + κ_sγ)/γ)`.
pub fn optimal_waveguide_rate(kappa_s: f64, g: f64, gamma: f64) -> Result<f64> {
    ensure_nonnegative("kappa_s", kappa_s)?;
    ensure_nonnegative("g", g)?;
    if !(gamma > 0.0) {
        return Err(Error::invalid("gamma", "must be positive"));
    }
    Ok((kappa_s * (4.0 * g * g + kappa_s * gamma) / gamma).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        let c = cooperativity(6.81, 328.74, 0.1).unwrap();
        assert!((c - 5.64).abs() < 0.01);
        let e = source_efficiency(6.81, 240.0, 89.0, 0.1).unwrap();
        assert!((e.eta_s - 0.62).abs() < 0.01);
        assert!((e.eta_s - e.p_c * e.p_w).abs() < 1e-12);
        let k = optimal_waveguide_rate(89.0, 6.81, 0.1).unwrap();
        assert!((k - 416.0).abs() < 1.0, "{k}");
    }

    #[test]
    fn limits() {
        assert_eq!(source_efficiency(6.81, 0.0, 89.0, 0.1).unwrap().eta_s, 0.0);
        assert!(source_efficiency(1e4, 300.0, 0.0, 0.1).unwrap().eta_s > 0.999);
        assert_eq!(optimal_waveguide_rate(0.0, 6.81, 0.1).unwrap(), 0.0);
        assert!((optimal_waveguide_rate(89.0, 0.0, 0.1).unwrap() - 89.0).abs() < 1e-12);
        assert_eq!(cooperativity(0.0, 300.0, 0.1).unwrap(), 0.0);
        let c1 = cooperativity(3.0, 300.0, 0.1).unwrap();
        let c2 = cooperativity(6.0, 300.0, 0.1).unwrap();
        assert!((c2 / c1 - 4.0).abs() < 1e-12);
        assert!(source_efficiency(1.0, 1.0, 1.0, 0.0).is_err());
        assert!(cooperativity(1.0, 0.0, 0.1).is_err());
    }
}
