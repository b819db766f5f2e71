//! Closed-loop scenarios under bounded random network delays.
//!
//! Delays come from xoshiro256++ seeded through SplitMix64
//! (`Xoshiro256PlusPlus::seed_from_u64`). Each 64-bit output `x` becomes
//! `(x >> 11) * 2^-53` in `[0, 1)`, scaled by the path's bound; draws
//! alternate sensor, actuator, sensor, ... one pair per sampling interval.

use std::fmt;
use std::str::FromStr;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::compensators::{assemble_smith_loop, ise, unity_feedback_loop, CompensatorError, ACTUATOR_PATH};
use crate::lti::{simulate_lti, LtiError, RationalTF, SimOptions, UncertainDelayPair};

/// Per-interval delays of both network paths, in the plant's time unit.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayTrace {
    pub seed: u64,
    /// Length of each sampling interval over which a delay is held.
    pub period: f64,
    pub sensor: Vec<f64>,
    pub actuator: Vec<f64>,
}

impl DelayTrace {
    /// Both paths delay-free.
    pub fn zero(n_samples: usize, period: f64) -> Self {
        Self {
            seed: 0,
            period,
            sensor: vec![0.0; n_samples],
            actuator: vec![0.0; n_samples],
        }
    }

    /// Delay in force on `path` at time `t`.
    pub fn at(&self, path: usize, t: f64) -> f64 {
        let v = if path == ACTUATOR_PATH { &self.actuator } else { &self.sensor };
        let k = ((t / self.period + 1e-9).floor() as usize).min(v.len() - 1);
        v[k]
    }
}

fn unit_draw(rng: &mut Xoshiro256PlusPlus) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// i.i.d. uniform delays on `[0, bound]` for each path.
pub fn sample_delays(seed: u64, n_samples: usize, bounds: UncertainDelayPair, period: f64) -> DelayTrace {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut sensor = Vec::with_capacity(n_samples);
    let mut actuator = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        sensor.push(unit_draw(&mut rng) * bounds.sensor());
        actuator.push(unit_draw(&mut rng) * bounds.actuator());
    }
    DelayTrace {
        seed,
        period,
        sensor,
        actuator,
    }
}

/// True iff the output leaves `multiplier` times the largest setpoint
/// magnitude, or stops being finite.
pub fn divergence_detect(output: &[f64], setpoint: &[f64], multiplier: f64) -> bool {
    let r_max = setpoint.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
    output.iter().any(|y| !y.is_finite() || y.abs() > multiplier * r_max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ScenarioKind {
    NominalNoDelay,
    NominalDelayed,
    Smith,
    Robust,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [
        ScenarioKind::NominalNoDelay,
        ScenarioKind::NominalDelayed,
        ScenarioKind::Smith,
        ScenarioKind::Robust,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::NominalNoDelay => "nominal-no-delay",
            Self::NominalDelayed => "nominal-delayed",
            Self::Smith => "smith",
            Self::Robust => "robust",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown scenario `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub plant: RationalTF,
    /// Smith predictor's internal model; the plant itself when `None`.
    pub plant_model: Option<RationalTF>,
    /// PI gains for the nominal and Smith loops, the tuned controller for
    /// the robust one.
    pub controller: RationalTF,
    pub delays: UncertainDelayPair,
    /// Step height applied at `t = 0`.
    pub setpoint: f64,
    pub dt: f64,
    pub horizon: f64,
    /// Interval over which each sampled delay is held.
    pub sample_period: f64,
    pub divergence_multiplier: f64,
    pub seed: u64,
}

impl ScenarioConfig {
    /// Unit step, 0.01 ms step, 200 ms horizon, delays resampled every 0.1 ms.
    pub fn new(kind: ScenarioKind, plant: RationalTF, controller: RationalTF, delays: UncertainDelayPair, seed: u64) -> Self {
        Self {
            kind,
            plant,
            plant_model: None,
            controller,
            delays,
            setpoint: 1.0,
            dt: 0.01,
            horizon: 200.0,
            sample_period: 0.1,
            divergence_multiplier: 10.0,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub kind: ScenarioKind,
    pub time: Vec<f64>,
    pub setpoint: Vec<f64>,
    pub output: Vec<f64>,
    pub control: Vec<f64>,
    /// `+inf` when the run diverged.
    pub ise: f64,
    pub unstable: bool,
    pub seed: u64,
    pub delays: UncertainDelayPair,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Lti(#[from] LtiError),
    #[error(transparent)]
    Compensator(#[from] CompensatorError),
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioResult, SimError> {
    let n_samples = (config.horizon / config.sample_period).ceil() as usize + 1;
    let trace = match config.kind {
        ScenarioKind::NominalNoDelay => DelayTrace::zero(n_samples, config.sample_period),
        _ => sample_delays(config.seed, n_samples, config.delays, config.sample_period),
    };
    let wired = match config.kind {
        ScenarioKind::Smith => {
            let model = config.plant_model.as_ref().unwrap_or(&config.plant);
            assemble_smith_loop(&config.controller, model, config.delays.sensor(), config.delays.actuator())?
                .wire(&config.plant)
        }
        _ => unity_feedback_loop(&config.controller, &config.plant),
    };
    let step = config.setpoint;
    let sim = simulate_lti(
        &wired.diagram,
        &|_| step,
        &|path, t| trace.at(path, t),
        &[wired.setpoint, wired.output, wired.control],
        SimOptions {
            dt: config.dt,
            horizon: config.horizon,
            max_delay: config.delays.sensor().max(config.delays.actuator()),
        },
    )?;
    let mut signals = sim.signals.into_iter();
    let (setpoint, output, control) = (signals.next().unwrap(), signals.next().unwrap(), signals.next().unwrap());
    let unstable = divergence_detect(&output, &setpoint, config.divergence_multiplier);
    let ise = if unstable { f64::INFINITY } else { ise(&setpoint, &output, config.dt)? };
    Ok(ScenarioResult {
        kind: config.kind,
        time: sim.time,
        setpoint,
        output,
        control,
        ise,
        unstable,
        seed: config.seed,
        delays: config.delays,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_bound_gives_zero_trace() {
        let t = sample_delays(7, 100, UncertainDelayPair::new(0.0, 0.0).unwrap(), 0.1);
        assert!(t.sensor.iter().chain(&t.actuator).all(|&d| d == 0.0));
    }

    #[test]
    fn draws_follow_the_documented_recipe() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(42);
        let x = rng.next_u64();
        let t = sample_delays(42, 1, UncertainDelayPair::new(2.0, 1.0).unwrap(), 0.1);
        assert_eq!(t.sensor[0], (x >> 11) as f64 / 2f64.powi(53) * 2.0);
    }

    #[test]
    fn trace_is_held_per_interval() {
        let t = DelayTrace {
            seed: 0,
            period: 0.1,
            sensor: vec![1.0, 2.0, 3.0],
            actuator: vec![4.0, 5.0, 6.0],
        };
        assert_eq!(t.at(0, 0.0), 1.0);
        assert_eq!(t.at(0, 0.1), 2.0);
        assert_eq!(t.at(ACTUATOR_PATH, 0.15), 5.0);
        assert_eq!(t.at(0, 10.0), 3.0);
    }

    #[test]
    fn divergence_rule() {
        let r = vec![1.0; 50];
        let bounded: Vec<f64> = (0..50).map(|k| 1.3 * (1.0 - (-(k as f64) / 5.0).exp())).collect();
        assert!(!divergence_detect(&bounded, &r, 10.0));
        let growing: Vec<f64> = (0..50).map(|k| (k as f64 / 5.0).exp()).collect();
        assert!(divergence_detect(&growing, &r, 10.0));
        assert!(divergence_detect(&[f64::NAN], &[1.0], 10.0));
    }

    #[test]
    fn scenario_names_round_trip() {
        for k in ScenarioKind::ALL {
            assert_eq!(k.name().parse::<ScenarioKind>().unwrap(), k);
        }
        assert!("other".parse::<ScenarioKind>().is_err());
    }
}
