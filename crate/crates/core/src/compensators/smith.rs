use super::{stability_check, CompensatorError};
use crate::lti::{delay_rational_approx, Diagram, RationalTF, Signal};

/// Transport-delay path numbers used by the wired loops.
pub const SENSOR_PATH: usize = 0;
pub const ACTUATOR_PATH: usize = 1;

/// A closed loop ready for simulation: setpoint -> controller -> actuator
/// network path -> plant -> sensor network path -> back to the controller.
#[derive(Debug, Clone)]
pub struct WiredLoop {
    pub diagram: Diagram,
    pub setpoint: Signal,
    /// Plant output.
    pub output: Signal,
    /// Plant output as received by the controller.
    pub measured: Signal,
    /// Controller output.
    pub control: Signal,
    /// Controller input.
    pub error: Signal,
    /// Model output without delays, Smith loops only.
    pub model_undelayed: Option<Signal>,
}

/// Classical loop `e = r - y_measured`.
pub fn unity_feedback_loop(controller: &RationalTF, plant: &RationalTF) -> WiredLoop {
    let mut d = Diagram::new();
    let r = d.input();
    let y = d.block("plant", plant.clone());
    let ym = d.delay("sensor network", y, SENSOR_PATH);
    let e = d.sum("error", &[(1.0, r), (-1.0, ym)]);
    let u = d.block_from("controller", controller.clone(), e);
    let ua = d.delay("actuator network", u, ACTUATOR_PATH);
    d.connect(y, ua).expect("plant is a block");
    WiredLoop {
        diagram: d,
        setpoint: r,
        output: y,
        measured: ym,
        control: u,
        error: e,
        model_undelayed: None,
    }
}

/// Controller with minor loops through an internal plant model and rational
/// models of the two network delays.
#[derive(Debug, Clone, PartialEq)]
pub struct SmithLoop {
    pub controller: RationalTF,
    pub plant_model: RationalTF,
    pub sensor_model: RationalTF,
    pub actuator_model: RationalTF,
}

/// Builds the predictor with both delay models at their bounds.
pub fn assemble_smith_loop(
    controller: &RationalTF,
    plant_model: &RationalTF,
    ubd_sensor: f64,
    ubd_actuator: f64,
) -> Result<SmithLoop, CompensatorError> {
    if !plant_model.is_strictly_proper() || !stability_check(plant_model.den())? {
        return Err(CompensatorError::UnstablePlantModel);
    }
    Ok(SmithLoop {
        controller: controller.clone(),
        plant_model: plant_model.clone(),
        sensor_model: delay_rational_approx(ubd_sensor)?,
        actuator_model: delay_rational_approx(ubd_actuator)?,
    })
}

impl SmithLoop {
    /// Wires the predictor around `plant`. The controller sees the corrected
    /// error `r - y_measured + y*_delayed - y*_undelayed`.
    pub fn wire(&self, plant: &RationalTF) -> WiredLoop {
        let mut d = Diagram::new();
        let r = d.input();
        let y = d.block("plant", plant.clone());
        let ym = d.delay("sensor network", y, SENSOR_PATH);
        let model = d.block("model", self.plant_model.clone());
        let model_path = d.block("model behind actuator delay", self.plant_model.clone());
        let model_delayed = d.block_from("model delayed", self.sensor_model.clone(), model_path);
        let e = d.sum(
            "corrected error",
            &[(1.0, r), (-1.0, ym), (1.0, model_delayed), (-1.0, model)],
        );
        let u = d.block_from("controller", self.controller.clone(), e);
        let u_model = d.block_from("actuator delay model", self.actuator_model.clone(), u);
        let ua = d.delay("actuator network", u, ACTUATOR_PATH);
        for (block, input) in [(y, ua), (model, u), (model_path, u_model)] {
            d.connect(block, input).expect("wired nodes are blocks");
        }
        WiredLoop {
            diagram: d,
            setpoint: r,
            output: y,
            measured: ym,
            control: u,
            error: e,
            model_undelayed: Some(model),
        }
    }
}
