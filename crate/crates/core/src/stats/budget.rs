use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Stage efficiencies as `[low, high]` ranges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossBudget {
    pub initialization: (f64, f64),
    pub siv_to_waveguide: (f64, f64),
    pub fiber_coupling: (f64, f64),
    pub filter_setup: (f64, f64),
    pub fiber_network: (f64, f64),
    pub detector: (f64, f64),
}

impl LossBudget {
    /// Values of the measured setup.
    pub fn reference() -> Self {
        Self {
            initialization: (0.8, 1.0),
            siv_to_waveguide: (0.62, 0.62),
            fiber_coupling: (0.7, 0.7),
            filter_setup: (0.5, 0.6),
            fiber_network: (0.92, 0.92),
            detector: (0.85, 0.9),
        }
    }

    pub fn factors(&self) -> [(&'static str, (f64, f64)); 6] {
        [
            ("initialization", self.initialization),
            ("siv_to_waveguide", self.siv_to_waveguide),
            ("fiber_coupling", self.fiber_coupling),
            ("filter_setup", self.filter_setup),
            ("fiber_network", self.fiber_network),
            ("detector", self.detector),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in self.factors() {
            if !(lo > 0.0 && hi <= 1.0 && lo <= hi) {
                return Err(Error::invalid(
                    "loss budget",
                    format!("{name} range [{lo}, {hi}] must satisfy 0 < low <= high <= 1"),
                ));
            }
        }
        Ok(())
    }

    /// Interval product of all factors. Every factor is positive, so the
    /// bounds are the products of the lows and of the highs.
    pub fn product(&self) -> Result<(f64, f64)> {
        self.validate()?;
        Ok(self
            .factors()
            .iter()
            .fold((1.0, 1.0), |(a, b), (_, (lo, hi))| (a * lo, b * hi)))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let b: Self = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        b.validate()?;
        Ok(b)
    }
}

/// `D = click_rate / (rep_rate·efficiency)`.
pub fn duty_cycle(rep_rate_khz: f64, per_pulse_efficiency: f64, click_rate_khz: f64) -> Result<f64> {
    crate::error::ensure_positive("rep_rate_khz", rep_rate_khz)?;
    crate::error::ensure_positive("click_rate_khz", click_rate_khz)?;
    if !(per_pulse_efficiency > 0.0 && per_pulse_efficiency <= 1.0) {
        return Err(Error::invalid(
            "per_pulse_efficiency",
            format!("must lie in (0, 1], got {per_pulse_efficiency}"),
        ));
    }
    Ok(click_rate_khz / (rep_rate_khz * per_pulse_efficiency))
}

/// Shares of the down-time by cause.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DowntimeDecomposition {
    pub ionization: f64,
    pub relock: f64,
    pub software: f64,
}

impl DowntimeDecomposition {
    pub fn reference() -> Self {
        Self {
            ionization: 0.56,
            relock: 0.09,
            software: 0.35,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.ionization, self.relock, self.software];
        if parts.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::invalid("downtime", "fractions must lie in [0, 1]"));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 0.01 {
            return Err(Error::invalid("downtime", format!("fractions sum to {sum}, not 1")));
        }
        Ok(())
    }

    /// Fractions of total wall-clock time lost to each cause.
    pub fn of_total_time(&self, duty: f64) -> Result<Self> {
        self.validate()?;
        if !(0.0..=1.0).contains(&duty) {
            return Err(Error::invalid("duty", "must lie in [0, 1]"));
        }
        let down = 1.0 - duty;
        Ok(Self {
            ionization: self.ionization * down,
            relock: self.relock * down,
            software: self.software * down,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WcsGain {
    Finite(f64),
    /// A perfectly pure source has no infidelity-matched coherent source.
    Infinite,
}

impl WcsGain {
    pub fn value(self) -> f64 {
        match self {
            WcsGain::Finite(v) => v,
            WcsGain::Infinite => f64::INFINITY,
        }
    }
}

/// Rate gain over an infidelity-matched weak coherent source, `D/g²(0)`.
pub fn wcs_gain(duty: f64, g2_zero: f64) -> Result<WcsGain> {
    crate::error::ensure_nonnegative("duty", duty)?;
    crate::error::ensure_nonnegative("g2_zero", g2_zero)?;
    if g2_zero == 0.0 {
        return Ok(WcsGain::Infinite);
    }
    Ok(WcsGain::Finite(duty / g2_zero))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WcsMonteCarlo {
    pub infidelity_sps: f64,
    pub infidelity_sps_sigma: f64,
    pub infidelity_wcs: f64,
    pub infidelity_wcs_sigma: f64,
    /// Duty-weighted single-photon rate ratio, source over coherent.
    pub rate_ratio: f64,
    pub rate_ratio_sigma: f64,
}

/// Samples photon-number counts of the single-photon source
/// (`P(1) = p1`, `P(2) = g²p1²/2`) and of a coherent source whose mean is
/// chosen so `P(1)_wcs = g²·P(1)_sps`, over `pulses` pulses each.
pub fn wcs_monte_carlo(p1: f64, g2_zero: f64, duty: f64, pulses: u64, seed: u64) -> Result<WcsMonteCarlo> {
    if !(p1 > 0.0 && p1 < 1.0) {
        return Err(Error::invalid("p1", "must lie in (0, 1)"));
    }
    if !(g2_zero > 0.0 && g2_zero <= 1.0) {
        return Err(Error::invalid("g2_zero", "must lie in (0, 1]"));
    }
    crate::error::ensure_positive("duty", duty)?;
    if pulses == 0 {
        return Err(Error::EmptyInput("pulses"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // (N1, N2) from a multinomial over {1, 2, other}
    let mut draw = |q1: f64, q2: f64| -> Result<(f64, f64)> {
        let bin = |n: u64, p: f64| Binomial::new(n, p.clamp(0.0, 1.0)).map_err(|e| Error::invalid("probability", e.to_string()));
        let n2 = bin(pulses, q2)?.sample(&mut rng);
        let n1 = bin(pulses - n2, q1 / (1.0 - q2))?.sample(&mut rng);
        Ok((n1 as f64, n2 as f64))
    };
    let (s1, s2) = draw(p1, 0.5 * g2_zero * p1 * p1)?;

    // μe^{−μ} = g²·p1, small root by fixed point
    let target = g2_zero * p1;
    if target >= (-1.0f64).exp() {
        return Err(Error::invalid("p1", "no coherent state reaches that single-photon probability"));
    }
    let mut mu = target;
    for _ in 0..200 {
        mu = target * mu.exp();
    }
    let (w1, w2) = draw(target, 0.5 * mu * mu * (-mu).exp())?;
    if s1 == 0.0 || w1 == 0.0 || s2 == 0.0 || w2 == 0.0 {
        return Err(Error::invalid("pulses", "too few pulses to observe two-photon events"));
    }
    let ratio_err = |n2: f64, n1: f64| (n2 / n1) * (1.0 / n2 + 1.0 / n1).sqrt();
    Ok(WcsMonteCarlo {
        infidelity_sps: s2 / s1,
        infidelity_sps_sigma: ratio_err(s2, s1),
        infidelity_wcs: w2 / w1,
        infidelity_wcs_sigma: ratio_err(w2, w1),
        rate_ratio: duty * s1 / w1,
        rate_ratio_sigma: duty * s1 / w1 * (1.0 / s1 + 1.0 / w1).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_budget() {
        let (lo, hi) = LossBudget::reference().product().unwrap();
        assert!((lo - 0.1358).abs() < 1e-3 && (hi - 0.2156).abs() < 1e-3);
        let json = serde_json::to_string(&LossBudget::reference()).unwrap();
        assert_eq!(LossBudget::from_json(&json).unwrap(), LossBudget::reference());
        assert!(LossBudget::from_json(&json.replace("detector", "detektor")).is_err());
    }

    #[test]
    fn duty_and_gain() {
        assert!((duty_cycle(405.0, 0.135, 31.0).unwrap() - 0.567).abs() < 1e-3);
        assert!((duty_cycle(405.0, 0.2, 81.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(duty_cycle(405.0, 0.0, 31.0).is_err());
        assert_eq!(wcs_gain(1.0, 1.0).unwrap(), WcsGain::Finite(1.0));
        assert_eq!(wcs_gain(0.5, 0.0).unwrap(), WcsGain::Infinite);
        let d = DowntimeDecomposition::reference().of_total_time(0.57).unwrap();
        assert!((d.ionization + d.relock + d.software - 0.43).abs() < 1e-12);
        let bad = DowntimeDecomposition {
            software: 0.2,
            ..DowntimeDecomposition::reference()
        };
        assert!(bad.validate().is_err());
    }
}
