//! Continuous-time SISO systems: transfer-function algebra, frequency-domain
//! robustness measures and a fixed-step simulator.

mod diagram;
pub mod poly;
mod robust;
mod tf;
mod weights;

pub use diagram::{simulate_lti, Diagram, Signal, SimOptions, SimTrace};
pub use robust::{closed_loop_polynomial, mixed_sensitivity_norm, rp_holds, FrequencyGrid};
pub use tf::{RationalTF, TimeUnit};
pub use weights::{
    delay_rational_approx, delay_weight, perf_weight, uncertainty_radius, UncertainDelayPair,
    DELAY_CORNER,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LtiError {
    #[error("denominator is zero or not finite")]
    DegenerateDenominator,
    #[error("transfer functions use different time units")]
    UnitMismatch,
    #[error("pole on the imaginary axis at omega = {omega}")]
    PoleOnGrid { omega: f64 },
    #[error("nominal closed loop is unstable")]
    UnstableNominal,
    #[error("time step {dt} exceeds a tenth of the fastest time constant ({limit})")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("block `{0}` is improper and cannot be simulated")]
    ImproperBlock(String),
    #[error("invalid diagram: {0}")]
    InvalidDiagram(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}
