//! Dimensionless conventions and the physical-to-dimensionless bridge.
//!
//! All numerical work uses the excited-state coherence decay rate as the
//! rate unit (gamma = 1) and the medium length as the length unit, so the
//! medium spans xi in [0, 1] and the speed of light is absorbed into the
//! optical depth. Physical quantities only appear in [`PhysicalCell`] and
//! [`UnitSystem`].

use std::f64::consts::PI;

use crate::error::{domain, Result};

/// Excited-state linewidth in its own units.
pub const GAMMA: f64 = 1.0;

/// A vapor cell as described in the lab: density, dimensions, control beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalCell {
    /// Atomic number density, cm^-3.
    pub density: f64,
    /// Cell length, cm.
    pub length: f64,
    /// Cell diameter, cm.
    pub diameter: f64,
    /// Control beam power, mW.
    pub control_power_mw: f64,
    /// Control beam diameter, mm.
    pub beam_diameter_mm: f64,
    /// Control Rabi frequency (ordinary frequency), MHz.
    pub rabi_mhz: f64,
}

impl PhysicalCell {
    pub fn new(density: f64, length: f64, diameter: f64) -> Result<Self> {
        let cell = PhysicalCell {
            density,
            length,
            diameter,
            control_power_mw: 0.0,
            beam_diameter_mm: 7.0,
            rabi_mhz: 0.0,
        };
        cell.validate()?;
        Ok(cell)
    }

    pub fn with_control(mut self, power_mw: f64, rabi_mhz: f64) -> Self {
        self.control_power_mw = power_mw;
        self.rabi_mhz = rabi_mhz;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.density > 0.0 && self.density.is_finite()) {
            return domain(format!("density must be positive, got {}", self.density));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return domain(format!("length must be positive, got {}", self.length));
        }
        if !(self.diameter > 0.0 && self.diameter.is_finite()) {
            return domain(format!("diameter must be positive, got {}", self.diameter));
        }
        Ok(())
    }
}

/// Reference point fixing the light-atom coupling: the optical depth
/// `d_ref` observed at `density_ref` in a cell of length `length_ref`.
///
/// The coupling constant itself never enters the equations, only the
/// product that forms the optical depth, so this single point plus
/// linearity in density and length determines every other depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthCalibration {
    pub density_ref: f64,
    pub length_ref: f64,
    pub d_ref: f64,
}

impl DepthCalibration {
    pub fn new(density_ref: f64, length_ref: f64, d_ref: f64) -> Result<Self> {
        if !(density_ref > 0.0 && length_ref > 0.0) {
            return domain("calibration reference density and length must be positive");
        }
        if !(d_ref >= 0.0 && d_ref.is_finite()) {
            return domain(format!("reference optical depth must be >= 0, got {d_ref}"));
        }
        Ok(DepthCalibration {
            density_ref,
            length_ref,
            d_ref,
        })
    }

    /// Optical depth per (cm^-3 * cm).
    pub fn coefficient(&self) -> f64 {
        self.d_ref / (self.density_ref * self.length_ref)
    }
}

impl Default for DepthCalibration {
    /// d = 4 at 4e10 cm^-3 in a 7.5 cm cell.
    fn default() -> Self {
        DepthCalibration {
            density_ref: 4.0e10,
            length_ref: 7.5,
            d_ref: 4.0,
        }
    }
}

/// Resonant optical depth of a cell, linear in density and length.
pub fn optical_depth(cell: &PhysicalCell, calibration: &DepthCalibration) -> Result<f64> {
    cell.validate()?;
    Ok(calibration.coefficient() * cell.density * cell.length)
}

/// Dimensionless description of the Lambda medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumParams {
    /// Resonant optical depth.
    pub d: f64,
    /// Spin-wave (ground coherence) amplitude decay rate.
    pub gamma_s: f64,
    /// One-photon detuning.
    pub delta: f64,
}

impl MediumParams {
    pub fn new(d: f64, gamma_s: f64, delta: f64) -> Result<Self> {
        let m = MediumParams { d, gamma_s, delta };
        m.validate()?;
        Ok(m)
    }

    pub fn resonant(d: f64) -> Result<Self> {
        Self::new(d, 0.0, 0.0)
    }

    pub fn gamma(&self) -> f64 {
        GAMMA
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d >= 0.0 && self.d.is_finite()) {
            return domain(format!("optical depth must be >= 0, got {}", self.d));
        }
        if !(self.gamma_s >= 0.0 && self.gamma_s.is_finite()) {
            return domain(format!("gamma_s must be >= 0, got {}", self.gamma_s));
        }
        if !self.delta.is_finite() {
            return domain("one-photon detuning must be finite");
        }
        Ok(())
    }
}

/// Conversion between lab units and the dimensionless system.
///
/// `gamma_per_us` is the physical excited-state coherence decay rate in
/// rad/us; one dimensionless time unit is `1 / gamma_per_us` microseconds.
/// Rabi frequencies are taken as ordinary frequencies (MHz) and converted
/// to angular frequency before scaling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitSystem {
    pub gamma_per_us: f64,
    pub length_cm: f64,
}

impl UnitSystem {
    pub fn new(gamma_per_us: f64, length_cm: f64) -> Result<Self> {
        if !(gamma_per_us > 0.0 && gamma_per_us.is_finite()) {
            return domain(format!("physical gamma must be positive, got {gamma_per_us}"));
        }
        if !(length_cm > 0.0 && length_cm.is_finite()) {
            return domain(format!("length must be positive, got {length_cm}"));
        }
        Ok(UnitSystem {
            gamma_per_us,
            length_cm,
        })
    }

    pub fn time_from_us(&self, t_us: f64) -> f64 {
        t_us * self.gamma_per_us
    }

    pub fn time_to_us(&self, t: f64) -> f64 {
        t / self.gamma_per_us
    }

    pub fn rate_from_per_us(&self, rate: f64) -> f64 {
        rate / self.gamma_per_us
    }

    pub fn rate_to_per_us(&self, rate: f64) -> f64 {
        rate * self.gamma_per_us
    }

    pub fn rabi_from_mhz(&self, f_mhz: f64) -> f64 {
        2.0 * PI * f_mhz / self.gamma_per_us
    }

    pub fn rabi_to_mhz(&self, omega: f64) -> f64 {
        omega * self.gamma_per_us / (2.0 * PI)
    }

    pub fn position_from_cm(&self, z_cm: f64) -> f64 {
        z_cm / self.length_cm
    }

    pub fn position_to_cm(&self, xi: f64) -> f64 {
        xi * self.length_cm
    }

    /// Dimensionless medium for a physical cell.
    pub fn medium(
        &self,
        cell: &PhysicalCell,
        calibration: &DepthCalibration,
        gamma_s: f64,
        delta: f64,
    ) -> Result<MediumParams> {
        MediumParams::new(optical_depth(cell, calibration)?, gamma_s, delta)
    }
}

impl Default for UnitSystem {
    /// gamma = 2 pi * 6.7 MHz, chosen so the 3.8 mW control (6.7 MHz Rabi)
    /// maps to Omega = 1.
    fn default() -> Self {
        UnitSystem {
            gamma_per_us: 2.0 * PI * 6.7,
            length_cm: 7.5,
        }
    }
}

/// Control Rabi frequency at `power_mw`, scaling as the square root of
/// power from a reference (power, Rabi) pair.
pub fn rabi_at_power(power_mw: f64, ref_power_mw: f64, ref_rabi_mhz: f64) -> Result<f64> {
    if !(power_mw >= 0.0 && ref_power_mw > 0.0 && ref_rabi_mhz >= 0.0) {
        return domain("powers must be positive and Rabi frequency non-negative");
    }
    Ok(ref_rabi_mhz * (power_mw / ref_power_mw).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn zero_coupling_gives_zero_depth() {
        let cal = DepthCalibration::new(4e10, 7.5, 0.0).unwrap();
        let cell = PhysicalCell::new(1e12, 7.5, 2.5).unwrap();
        assert_eq!(optical_depth(&cell, &cal).unwrap(), 0.0);
    }

    #[test]
    fn doubling_density_doubles_depth() {
        let cal = DepthCalibration::default();
        let a = PhysicalCell::new(1.3e11, 7.5, 2.5).unwrap();
        let b = PhysicalCell::new(2.6e11, 7.5, 2.5).unwrap();
        let (da, db) = (
            optical_depth(&a, &cal).unwrap(),
            optical_depth(&b, &cal).unwrap(),
        );
        assert_eq!(db, 2.0 * da);
    }

    #[test]
    fn calibration_point_reproduced() {
        let cal = DepthCalibration::default();
        let cell = PhysicalCell::new(4e10, 7.5, 2.5).unwrap();
        assert_relative_eq!(optical_depth(&cell, &cal).unwrap(), 4.0, max_relative = 1e-14);
        // top of the reference density range: 25x the calibration point
        let hot = PhysicalCell::new(1e12, 7.5, 2.5).unwrap();
        assert_relative_eq!(optical_depth(&hot, &cal).unwrap(), 100.0, max_relative = 1e-12);
        // the elongated 15 cm cell at half the density matches
        let long = PhysicalCell::new(5e11, 15.0, 1.2).unwrap();
        assert_relative_eq!(optical_depth(&long, &cal).unwrap(), 100.0, max_relative = 1e-12);
    }

    #[test]
    fn non_positive_cell_rejected() {
        assert!(PhysicalCell::new(0.0, 7.5, 2.5).is_err());
        assert!(PhysicalCell::new(1e11, -1.0, 2.5).is_err());
        assert!(PhysicalCell::new(1e11, 7.5, 0.0).is_err());
    }

    #[test]
    fn medium_invariants() {
        assert!(MediumParams::new(-1.0, 0.0, 0.0).is_err());
        assert!(MediumParams::new(1.0, -1e-3, 0.0).is_err());
        let m = MediumParams::new(3.0, 0.1, 0.5).unwrap();
        assert_eq!(m.gamma(), 1.0);
    }

    #[test]
    fn default_units_map_reference_rabi_to_unity() {
        let u = UnitSystem::default();
        assert_relative_eq!(u.rabi_from_mhz(6.7), 1.0, max_relative = 1e-14);
        let r = rabi_at_power(8.8, 3.8, 6.7).unwrap();
        // 10 MHz quoted for 8.8 mW
        assert!((r - 10.0).abs() < 0.25, "{r}");
    }

    proptest! {
        #[test]
        fn depth_linear_in_density_and_length(
            n in 1e9f64..1e13, l in 0.1f64..50.0, k in 0.1f64..10.0
        ) {
            let cal = DepthCalibration::default();
            let base = optical_depth(&PhysicalCell::new(n, l, 1.0).unwrap(), &cal).unwrap();
            let dn = optical_depth(&PhysicalCell::new(k * n, l, 1.0).unwrap(), &cal).unwrap();
            let dl = optical_depth(&PhysicalCell::new(n, k * l, 1.0).unwrap(), &cal).unwrap();
            prop_assert!((dn - k * base).abs() <= 1e-12 * dn.abs().max(1.0));
            prop_assert!((dl - k * base).abs() <= 1e-12 * dl.abs().max(1.0));
        }

        #[test]
        fn unit_round_trip(gamma in 1e-2f64..1e4, x in 1e-6f64..1e6) {
            let u = UnitSystem::new(gamma, 7.5).unwrap();
            let rel = |a: f64, b: f64| ((a - b) / b).abs();
            prop_assert!(rel(u.time_to_us(u.time_from_us(x)), x) < 1e-12);
            prop_assert!(rel(u.rate_to_per_us(u.rate_from_per_us(x)), x) < 1e-12);
            prop_assert!(rel(u.rabi_to_mhz(u.rabi_from_mhz(x)), x) < 1e-12);
            prop_assert!(rel(u.position_to_cm(u.position_from_cm(x)), x) < 1e-12);
        }
    }
}
