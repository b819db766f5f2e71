//! Controllers around the delayed loop: PI, Smith predictor wiring, ISE
//! tuning and fixed-structure robust tuning.

mod nelder_mead;
mod smith;
mod stability;
mod tuning;

pub use nelder_mead::{nelder_mead, NelderMeadOptions, NelderMeadResult};
pub use smith::{
    assemble_smith_loop, unity_feedback_loop, SmithLoop, WiredLoop, ACTUATOR_PATH, SENSOR_PATH,
};
pub use stability::stability_check;
pub use tuning::{
    ise_of_pi, tune_pi_ise, tune_robust, ControllerStructure, IseTuneOptions, IseTuneResult,
    RobustTuneConfig, RobustTuneResult, SearchBox,
};

use crate::lti::{LtiError, RationalTF};

/// Gains of `C(s) = (Kp s + KI) / s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PIParams {
    pub kp: f64,
    pub ki: f64,
}

impl PIParams {
    pub fn new(kp: f64, ki: f64) -> Result<Self, CompensatorError> {
        if !(ki >= 0.0 && kp.is_finite() && ki.is_finite()) {
            return Err(CompensatorError::InvalidParameter("KI must be >= 0 and gains finite"));
        }
        Ok(Self { kp, ki })
    }
}

/// Gains tuned for 1 ms on each path of the reference plant; the baseline
/// every ISE tuning run is compared against.
pub const REFERENCE_PI: PIParams = PIParams {
    kp: 0.5508,
    ki: 0.4529,
};

pub fn pi_tf(p: PIParams) -> RationalTF {
    RationalTF::new(&[p.kp, p.ki], &[1.0, 0.0]).expect("s is a valid denominator")
}

/// PI followed by a first-order roll-off `1 / (1 + s/omega_r)`.
pub fn pi_rolloff_tf(p: PIParams, omega_r: f64) -> Result<RationalTF, CompensatorError> {
    if !(omega_r > 0.0 && omega_r.is_finite()) {
        return Err(CompensatorError::InvalidParameter("roll-off frequency must be > 0"));
    }
    Ok(RationalTF::new(&[p.kp, p.ki], &[1.0 / omega_r, 1.0, 0.0])?)
}

/// Trapezoidal integral of the squared tracking error.
pub fn ise(reference: &[f64], output: &[f64], dt: f64) -> Result<f64, CompensatorError> {
    if reference.len() != output.len() {
        return Err(CompensatorError::LengthMismatch {
            reference: reference.len(),
            output: output.len(),
        });
    }
    let e2: Vec<f64> = reference.iter().zip(output).map(|(r, y)| (r - y).powi(2)).collect();
    Ok(e2.windows(2).map(|w| 0.5 * (w[0] + w[1]) * dt).sum())
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CompensatorError {
    #[error("polynomial is identically zero")]
    ZeroPolynomial,
    #[error("Smith predictor needs a proper, open-loop stable plant model")]
    UnstablePlantModel,
    #[error("series lengths differ ({reference} vs {output})")]
    LengthMismatch { reference: usize, output: usize },
    #[error("no candidate in the search box gives a stable closed loop")]
    NoStablePoint,
    #[error("no stabilizing controller in the search box")]
    Infeasible,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error(transparent)]
    Lti(#[from] LtiError),
}
