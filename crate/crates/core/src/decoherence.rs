//! Density-dependent spin decoherence and the slow/stored-light
//! accounting identity.
//!
//! Lifetimes are intensity 1/e times: retrieved area after storage `tau`
//! falls as `exp(-tau / tau_c)`. The solver's spin wave amplitude decays
//! at `gamma_s`, so its intensity decays at `2 gamma_s` and
//! `gamma_s = 1 / (2 tau_c gamma)`.

use crate::error::{domain, Error, Result};

pub const DEFAULT_TAU0_US: f64 = 700.0;

/// Spin-exchange coefficient putting the peak of the 400 us stored-light
/// efficiency near 2-3e11 cm^-3.
pub const DEFAULT_K_SE: f64 = 3e-15;

/// `1/tau(N) = 1/tau_0 + k_se N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoherenceModel {
    /// Baseline lifetime, us.
    pub tau0: f64,
    /// Per (cm^-3 us).
    pub k_se: f64,
}

impl Default for DecoherenceModel {
    fn default() -> Self {
        DecoherenceModel {
            tau0: DEFAULT_TAU0_US,
            k_se: DEFAULT_K_SE,
        }
    }
}

impl DecoherenceModel {
    pub fn new(tau0: f64, k_se: f64) -> Result<Self> {
        if !(tau0 > 0.0) {
            return domain(format!("baseline lifetime must be positive, got {tau0}"));
        }
        if !(k_se >= 0.0 && k_se.is_finite()) {
            return domain(format!("k_se must be finite and non-negative, got {k_se}"));
        }
        Ok(DecoherenceModel { tau0, k_se })
    }

    /// No density dependence.
    pub fn constant(tau0: f64) -> Result<Self> {
        Self::new(tau0, 0.0)
    }

    /// `k_se` for which the lifetime at `density` is `tau0 / factor`.
    pub fn with_drop(tau0: f64, density: f64, factor: f64) -> Result<Self> {
        if !(density > 0.0 && factor >= 1.0) {
            return domain("need density > 0 and drop factor >= 1");
        }
        Self::new(tau0, (factor - 1.0) / (tau0 * density))
    }
}

/// Coherence lifetime in us at `density` (cm^-3).
pub fn coherence_lifetime(model: &DecoherenceModel, density: f64) -> Result<f64> {
    if !(density >= 0.0) {
        return domain(format!("density must be non-negative, got {density}"));
    }
    Ok(1.0 / (1.0 / model.tau0 + model.k_se * density))
}

/// Dimensionless spin decay rate for an intensity lifetime `tau_us`.
/// `gamma_per_us` is the physical excited-state rate (rad/us) and must be
/// supplied; an infinite lifetime gives zero.
pub fn gamma_s_from_lifetime(tau_us: f64, gamma_per_us: Option<f64>) -> Result<f64> {
    let gamma = gamma_per_us
        .ok_or_else(|| Error::Config("physical gamma is required to convert a lifetime".into()))?;
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Config(format!("physical gamma must be positive, got {gamma}")));
    }
    if !(tau_us > 0.0) {
        return domain(format!("coherence lifetime must be positive, got {tau_us}"));
    }
    Ok(1.0 / (2.0 * tau_us * gamma))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlowLightPrediction {
    pub value: f64,
    /// The back-extrapolated value exceeds 1, so it is dominated by the
    /// `exp(tau / tau_c)` factor and should not be trusted.
    pub exceeds_unity: bool,
}

/// `eta_leakage + eta(tau) exp(tau / tau_c)`: the slow-light efficiency
/// inferred from a stored-light measurement at storage time `tau`.
pub fn slow_light_prediction(
    eta_leakage: f64,
    eta_storage: f64,
    tau: f64,
    tau_coherence: f64,
) -> Result<SlowLightPrediction> {
    if !(tau_coherence > 0.0) {
        return domain(format!("coherence lifetime must be positive, got {tau_coherence}"));
    }
    if !(0.0..=1.0).contains(&eta_leakage) || !(0.0..=1.0).contains(&eta_storage) {
        return domain("efficiencies must lie in [0, 1]");
    }
    if !(tau >= 0.0) {
        return domain(format!("storage time must be non-negative, got {tau}"));
    }
    let value = eta_leakage + eta_storage * (tau / tau_coherence).exp();
    Ok(SlowLightPrediction {
        value,
        exceeds_unity: value > 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn lifetime_cases() {
        let m = DecoherenceModel::default();
        assert_eq!(coherence_lifetime(&m, 0.0).unwrap(), 700.0);
        let flat = DecoherenceModel::constant(700.0).unwrap();
        assert_eq!(coherence_lifetime(&flat, 1e12).unwrap(), 700.0);
        // tau(1e12) = tau0 / 3 means k N = 2 / tau0 there, so at half the
        // density 1/tau = 2 / tau0
        let m = DecoherenceModel::with_drop(700.0, 1e12, 3.0).unwrap();
        assert_relative_eq!(coherence_lifetime(&m, 1e12).unwrap(), 700.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(coherence_lifetime(&m, 0.5e12).unwrap(), 350.0, max_relative = 1e-14);
        assert!(coherence_lifetime(&m, -1.0).is_err());
        assert!(DecoherenceModel::new(0.0, 0.0).is_err());
        assert!(DecoherenceModel::new(700.0, -1e-15).is_err());
    }

    #[test]
    fn gamma_s_golden() {
        let g = 2.0 * std::f64::consts::PI * 6.7;
        let gs = gamma_s_from_lifetime(700.0, Some(g)).unwrap();
        assert_relative_eq!(gs, 1.696_747_794e-5, max_relative = 1e-7);
        assert_relative_eq!(gamma_s_from_lifetime(700.0, Some(2.0 * g)).unwrap(), 0.5 * gs, max_relative = 1e-14);
        assert_eq!(gamma_s_from_lifetime(f64::INFINITY, Some(g)).unwrap(), 0.0);
        assert!(matches!(gamma_s_from_lifetime(700.0, None), Err(Error::Config(_))));
        assert!(gamma_s_from_lifetime(0.0, Some(g)).is_err());
    }

    #[test]
    fn prediction_limits() {
        let p = slow_light_prediction(0.2, 0.3, 400.0, f64::INFINITY).unwrap();
        assert_eq!(p.value, 0.5);
        assert!(!p.exceeds_unity);
        assert_eq!(slow_light_prediction(0.2, 0.0, 400.0, 700.0).unwrap().value, 0.2);
        let p = slow_light_prediction(0.1, 0.6, 400.0, 100.0).unwrap();
        assert!(p.exceeds_unity);
        assert!(slow_light_prediction(0.1, 0.1, 400.0, 0.0).is_err());
        assert!(slow_light_prediction(0.1, 1.5, 400.0, 10.0).is_err());
    }

    proptest! {
        #[test]
        fn lifetime_decreases_with_density(n in 0.0f64..1e12, dn in 1e9f64..1e12, k in 1e-16f64..1e-13) {
            let m = DecoherenceModel::new(700.0, k).unwrap();
            prop_assert!(coherence_lifetime(&m, n + dn).unwrap() < coherence_lifetime(&m, n).unwrap());
        }

        #[test]
        fn prediction_increasing(a in 0.0f64..0.5, b in 0.0f64..0.5, da in 1e-6f64..0.4, tau in 0.0f64..500.0) {
            let base = slow_light_prediction(a, b, tau, 700.0).unwrap().value;
            prop_assert!(slow_light_prediction(a + da, b, tau, 700.0).unwrap().value > base);
            prop_assert!(slow_light_prediction(a, b + da, tau, 700.0).unwrap().value > base);
        }
    }
}
