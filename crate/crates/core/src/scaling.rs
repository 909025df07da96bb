//! Closed-form EIT scaling laws.
//!
//! The group-velocity and delay formulas use L = c = gamma = 1, so the
//! coupling product g^2 N equals the optical depth and the vacuum transit
//! time is one unit. The propagation solver works in the co-moving frame,
//! where the vacuum transit is dropped; [`comoving_delay`] is the matching
//! quantity.

use crate::error::{domain, Result};
use crate::units::{MediumParams, GAMMA};

/// EIT transparency width `|Omega|^2 / (gamma sqrt(d))`.
pub fn eit_bandwidth(omega_c: f64, medium: &MediumParams) -> Result<f64> {
    if medium.d <= 0.0 {
        return domain("EIT bandwidth diverges at zero optical depth");
    }
    if !(omega_c > 0.0) {
        return domain(format!("control Rabi frequency must be positive, got {omega_c}"));
    }
    Ok(omega_c * omega_c / (GAMMA * medium.d.sqrt()))
}

fn check_omega(omega_c: f64) -> Result<()> {
    if !(omega_c > 0.0 && omega_c.is_finite()) {
        return domain(format!("control Rabi frequency must be positive, got {omega_c}"));
    }
    Ok(())
}

/// Group velocity in units of c: `1 / (1 + g^2 N / |Omega|^2)`.
pub fn group_velocity(omega_c: f64, medium: &MediumParams) -> Result<f64> {
    check_omega(omega_c)?;
    Ok(1.0 / (1.0 + medium.d / (omega_c * omega_c)))
}

/// Slow-light limit `|Omega|^2 / g^2 N` of [`group_velocity`].
pub fn group_velocity_slow_limit(omega_c: f64, medium: &MediumParams) -> Result<f64> {
    check_omega(omega_c)?;
    if medium.d <= 0.0 {
        return domain("slow-light limit undefined for an empty medium");
    }
    Ok(omega_c * omega_c / medium.d)
}

/// Medium length over group velocity, vacuum transit included.
pub fn absolute_delay(medium: &MediumParams, omega_c: f64) -> Result<f64> {
    Ok(1.0 / group_velocity(omega_c, medium)?)
}

/// Delay relative to vacuum propagation, `d gamma / |Omega|^2`.
pub fn comoving_delay(medium: &MediumParams, omega_c: f64) -> Result<f64> {
    check_omega(omega_c)?;
    Ok(medium.d * GAMMA / (omega_c * omega_c))
}
