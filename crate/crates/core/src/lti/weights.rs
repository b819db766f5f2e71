//! Rational delay model and the uncertainty weights built around it.

use std::f64::consts::PI;

use super::{LtiError, RationalTF};

/// Corner constant of the first-order delay model and delay weight.
pub const DELAY_CORNER: f64 = 3.465;

/// `1 - tau*s / (1 + tau*s/3.465)`, i.e. `(1 - tau*s*(1 - 1/3.465)) / (1 + tau*s/3.465)`.
pub fn delay_rational_approx(tau: f64) -> Result<RationalTF, LtiError> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(LtiError::InvalidParameter("delay must be >= 0"));
    }
    if tau == 0.0 {
        return Ok(RationalTF::gain(1.0));
    }
    RationalTF::new(
        &[-tau * (1.0 - 1.0 / DELAY_CORNER), 1.0],
        &[tau / DELAY_CORNER, 1.0],
    )
}

/// Smallest radius around the delay-free plant covering every delay in
/// `[0, theta]`, relative to the plant.
pub fn uncertainty_radius(omega: f64, theta: f64) -> f64 {
    if omega * theta >= PI {
        2.0
    } else {
        2.0 * (theta * omega / 2.0).sin().abs()
    }
}

/// `w_l(s) = theta*s / (1 + theta*s/3.465)`.
pub fn delay_weight(theta: f64) -> Result<RationalTF, LtiError> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(LtiError::InvalidParameter("theta must be > 0"));
    }
    RationalTF::new(&[theta, 0.0], &[theta / DELAY_CORNER, 1.0])
}

/// `w_p(s) = (s/M + omega_b) / (s + omega_b*A)`.
pub fn perf_weight(m: f64, omega_b: f64, a: f64) -> Result<RationalTF, LtiError> {
    if !(m > 0.0 && omega_b > 0.0 && a > 0.0 && a < 1.0) {
        return Err(LtiError::InvalidParameter("need M > 0, omega_b > 0, 0 < A < 1"));
    }
    RationalTF::new(&[1.0 / m, omega_b], &[1.0, omega_b * a])
}

/// Bounds of the sensor and actuator path delays, in the plant's time unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertainDelayPair {
    sensor: f64,
    actuator: f64,
}

impl UncertainDelayPair {
    pub fn new(sensor: f64, actuator: f64) -> Result<Self, LtiError> {
        if !(sensor >= 0.0 && actuator >= 0.0) || !(sensor + actuator).is_finite() {
            return Err(LtiError::InvalidParameter("delay bounds must be >= 0"));
        }
        Ok(Self { sensor, actuator })
    }

    /// From bounds given in seconds, for a plant whose time unit is ms.
    pub fn from_seconds(sensor: f64, actuator: f64) -> Result<Self, LtiError> {
        Self::new(sensor * 1e3, actuator * 1e3)
    }

    pub fn sensor(&self) -> f64 {
        self.sensor
    }

    pub fn actuator(&self) -> f64 {
        self.actuator
    }

    /// Total round-trip bound `theta`.
    pub fn theta(&self) -> f64 {
        self.sensor + self.actuator
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn approx_has_unit_dc_gain() {
        assert_eq!(delay_rational_approx(0.0).unwrap(), RationalTF::gain(1.0));
        let d = delay_rational_approx(3.5).unwrap();
        assert!((d.freq_response(1e-12).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn radius_landmarks() {
        let theta = 7.0;
        assert!(uncertainty_radius(1e-12, theta) < 1e-10);
        assert_eq!(uncertainty_radius(PI / theta, theta), 2.0);
        assert!((uncertainty_radius(PI / (2.0 * theta), theta) - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn weight_asymptotes() {
        let wl = delay_weight(7.0).unwrap();
        assert!(wl.freq_response(1e-9).unwrap().norm() < 1e-7);
        assert!((wl.freq_response(1e9).unwrap().norm() - DELAY_CORNER).abs() < 1e-6);
        let wp = perf_weight(2.0, 0.02, 1e-4).unwrap();
        assert!((wp.freq_response(1e9).unwrap().norm() - 0.5).abs() < 1e-6);
        assert!((wp.freq_response(1e-12).unwrap().norm() - 1e4).abs() < 1e-3);
        assert!(perf_weight(2.0, 0.02, 1.0).is_err());
    }
}
