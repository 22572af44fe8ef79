//! Physical constants and unit conversions.

use std::f64::consts::PI;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Angular frequency (rad/s) of vacuum wavelength `lambda` (m).
#[inline]
pub fn wavelength_to_omega(lambda: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / lambda
}

/// Vacuum wavelength (m) of angular frequency `omega` (rad/s).
#[inline]
pub fn omega_to_wavelength(omega: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / omega
}

#[inline]
pub fn omega_to_wavelength_um(omega: f64) -> f64 {
    omega_to_wavelength(omega) * 1e6
}

/// Angular-frequency width corresponding to a small wavelength width `dlambda`
/// around `lambda`.
#[inline]
pub fn wavelength_width_to_omega(lambda: f64, dlambda: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT * dlambda / (lambda * lambda)
}

/// Delay (s) produced by a free-space path difference `path` (m).
#[inline]
pub fn path_to_delay(path: f64) -> f64 {
    path / SPEED_OF_LIGHT
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_roundtrip() {
        for &l in &[400e-9, 780e-9, 1.55e-6] {
            let back = omega_to_wavelength(wavelength_to_omega(l));
            assert!(((back - l) / l).abs() < 1e-15);
        }
    }

    #[test]
    fn stage_step_delay() {
        let tau = path_to_delay(0.02e-3);
        assert!((tau - 66.7128e-15).abs() < 1e-18);
    }
}
