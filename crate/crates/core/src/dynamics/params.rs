use serde::{Deserialize, Serialize};

use crate::error::ensure_nonnegative;
use crate::{Error, Result};

/// Joint atom-photon basis states in their fixed matrix ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisLabel {
    /// `|↑,0⟩`, the initialized spin state.
    Up0,
    /// `|↓′,0⟩`, the optically excited state.
    DownPrime0,
    /// `|↓,1⟩`, one photon in the cavity.
    Down1,
    /// `|↓,0⟩`, the spin state after photon emission.
    Down0,
    /// `|↑′,0⟩`, re-initialization level (five-level model only).
    UpPrime0,
}

impl BasisLabel {
    pub const ALL: [BasisLabel; 5] = [
        BasisLabel::Up0,
        BasisLabel::DownPrime0,
        BasisLabel::Down1,
        BasisLabel::Down0,
        BasisLabel::UpPrime0,
    ];

    pub const fn index(self) -> usize {
        match self {
            BasisLabel::Up0 => 0,
            BasisLabel::DownPrime0 => 1,
            BasisLabel::Down1 => 2,
            BasisLabel::Down0 => 3,
            BasisLabel::UpPrime0 => 4,
        }
    }

    pub fn labels(dim: usize) -> &'static [BasisLabel] {
        &Self::ALL[..dim.min(5)]
    }

    pub fn name(self) -> &'static str {
        match self {
            BasisLabel::Up0 => "up0",
            BasisLabel::DownPrime0 => "downprime0",
            BasisLabel::Down1 => "down1",
            BasisLabel::Down0 => "down0",
            BasisLabel::UpPrime0 => "upprime0",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    /// Photon generation only: `|↑,0⟩, |↓′,0⟩, |↓,1⟩, |↓,0⟩`.
    FourLevel,
    /// Adds `|↑′,0⟩` and the re-initialization drive.
    FiveLevel,
}

impl ModelKind {
    pub const fn dim(self) -> usize {
        match self {
            ModelKind::FourLevel => 4,
            ModelKind::FiveLevel => 5,
        }
    }
}

/// Direction(s) of the spin-qubit relaxation at rate `gamma_t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SpinRelaxation {
    /// `|↑⟩ → |↓⟩` only.
    DownOnly,
    /// `|↑⟩ ↔ |↓⟩` at equal rates. The reverse process re-prepares the
    /// emitter during a control pulse and is what produces secondary photons.
    #[default]
    Symmetric,
}

/// Rates and detunings of the atom-cavity system, in GHz (ordinary
/// frequency, i.e. the value multiplying 2π).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CqedParams {
    /// Single-photon atom-cavity coupling.
    pub g: f64,
    /// Cavity decay into the collection waveguide.
    pub kappa_w: f64,
    /// All other cavity loss (scattering and the unprobed side).
    pub kappa_s: f64,
    /// Optical spontaneous-emission rate (FWHM).
    pub gamma: f64,
    /// Spin-qubit relaxation rate.
    pub gamma_t: f64,
    /// Control-pulse detuning from `|↑⟩ → |↓′⟩`.
    pub delta: f64,
    /// Detuning between the emitter transition and the cavity.
    pub delta_c: f64,
    #[serde(default)]
    pub spin_relaxation: SpinRelaxation,
}

impl CqedParams {
    /// Device parameters of the measured SiV-cavity system.
    pub fn reference() -> Self {
        Self {
            g: 6.81,
            kappa_w: 240.0,
            kappa_s: 89.0,
            gamma: 0.1,
            gamma_t: 50e-6,
            delta: 0.0,
            delta_c: 19.88,
            spin_relaxation: SpinRelaxation::Symmetric,
        }
    }

    pub fn zero() -> Self {
        Self {
            g: 0.0,
            kappa_w: 0.0,
            kappa_s: 0.0,
            gamma: 0.0,
            gamma_t: 0.0,
            delta: 0.0,
            delta_c: 0.0,
            spin_relaxation: SpinRelaxation::Symmetric,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_nonnegative("g", self.g)?;
        ensure_nonnegative("kappa_w", self.kappa_w)?;
        ensure_nonnegative("kappa_s", self.kappa_s)?;
        ensure_nonnegative("gamma", self.gamma)?;
        ensure_nonnegative("gamma_t", self.gamma_t)?;
        if !self.delta.is_finite() {
            return Err(Error::NonFinite("delta"));
        }
        if !self.delta_c.is_finite() {
            return Err(Error::NonFinite("delta_c"));
        }
        Ok(())
    }

    pub fn kappa_tot(&self) -> f64 {
        self.kappa_w + self.kappa_s
    }

    /// `C = 4g²/(κ_tot γ)` on cavity resonance.
    pub fn cooperativity(&self) -> f64 {
        4.0 * self.g * self.g / (self.kappa_tot() * self.gamma)
    }

    /// Cooperativity reduced by the emitter-cavity detuning,
    /// `C / (1 + (2Δ_C/κ_tot)²)`.
    pub fn effective_cooperativity(&self) -> f64 {
        let x = 2.0 * self.delta_c / self.kappa_tot();
        self.cooperativity() / (1.0 + x * x)
    }

    /// Cavity-broadened emitter linewidth `Γ = (C+1)γ`.
    pub fn purcell_linewidth(&self) -> f64 {
        (self.cooperativity() + 1.0) * self.gamma
    }

    /// Probability that an excitation leaves through the cavity, `C/(C+1)`.
    pub fn cavity_branching(&self) -> f64 {
        let c = self.cooperativity();
        c / (c + 1.0)
    }

    pub fn effective_cavity_branching(&self) -> f64 {
        let c = self.effective_cooperativity();
        c / (c + 1.0)
    }
}

impl Default for CqedParams {
    fn default() -> Self {
        Self::reference()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_cooperativity() {
        let p = CqedParams::reference();
        assert!((p.kappa_tot() - 329.0).abs() < 1e-12);
        assert!((p.cooperativity() - 5.638).abs() < 1e-3);
        assert!(p.effective_cooperativity() < p.cooperativity());
    }

    #[test]
    fn negative_rate_is_rejected() {
        let mut p = CqedParams::reference();
        p.gamma_t = -1.0;
        assert!(matches!(
            p.validate(),
            Err(Error::InvalidParameter { name: "gamma_t", .. })
        ));
    }

    #[test]
    fn basis_ordering_is_fixed() {
        for (i, b) in BasisLabel::ALL.iter().enumerate() {
            assert_eq!(b.index(), i);
        }
        assert_eq!(BasisLabel::labels(4).len(), 4);
    }
}
