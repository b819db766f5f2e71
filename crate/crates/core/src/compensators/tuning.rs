use super::{
    ise, nelder_mead, pi_rolloff_tf, pi_tf, stability_check, unity_feedback_loop,
    CompensatorError, NelderMeadOptions, PIParams, REFERENCE_PI,
};
use crate::lti::{
    closed_loop_polynomial, mixed_sensitivity_norm, rp_holds, simulate_lti, FrequencyGrid,
    RationalTF, SimOptions,
};
use crate::sim::divergence_detect;

/// Closed interval per tuned parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl SearchBox {
    pub fn new(lower: &[f64], upper: &[f64]) -> Result<Self, CompensatorError> {
        let ok = lower.len() == upper.len()
            && lower.iter().zip(upper).all(|(l, u)| l.is_finite() && u.is_finite() && l < u);
        if !ok {
            return Err(CompensatorError::InvalidParameter("search box bounds must be finite with lower < upper"));
        }
        Ok(Self {
            lower: lower.to_vec(),
            upper: upper.to_vec(),
        })
    }

    fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| v >= l && v <= u)
    }

    /// `points` evenly spaced values per axis, as a full tensor grid.
    fn grid(&self, points: usize) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| (0..points).map(|k| l + (u - l) * k as f64 / (points - 1) as f64).collect())
            .collect();
        let mut out = vec![Vec::new()];
        for axis in &axes {
            out = out
                .into_iter()
                .flat_map(|p| axis.iter().map(move |v| [p.clone(), vec![*v]].concat()))
                .collect();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IseTuneOptions {
    /// Constant delay on each network path.
    pub delay_each_path: f64,
    pub horizon: f64,
    pub dt: f64,
    /// Box over `(Kp, KI)`.
    pub search: SearchBox,
    pub grid_points: usize,
    /// Extra starting candidates evaluated alongside the grid.
    pub candidates: Vec<PIParams>,
    pub optimizer: NelderMeadOptions,
}

impl Default for IseTuneOptions {
    fn default() -> Self {
        Self {
            delay_each_path: 1.0,
            horizon: 100.0,
            dt: 0.01,
            search: SearchBox::new(&[0.01, 0.0], &[3.0, 3.0]).unwrap(),
            grid_points: 7,
            candidates: vec![REFERENCE_PI],
            optimizer: NelderMeadOptions {
                max_evals: 150,
                f_tol: 1e-9,
                x_tol: 1e-5,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IseTuneResult {
    pub params: PIParams,
    pub ise: f64,
    /// Best value over the coarse grid and the extra candidates.
    pub best_start_ise: f64,
    pub evaluations: usize,
}

/// Unit-step ISE of the unity-feedback PI loop with a constant delay on
/// both paths; `+inf` when the response diverges.
pub fn ise_of_pi(plant: &RationalTF, params: PIParams, options: &IseTuneOptions) -> Result<f64, CompensatorError> {
    let wired = unity_feedback_loop(&pi_tf(params), plant);
    let tau = options.delay_each_path;
    let trace = simulate_lti(
        &wired.diagram,
        &|_| 1.0,
        &|_, _| tau,
        &[wired.setpoint, wired.output],
        SimOptions {
            dt: options.dt,
            horizon: options.horizon,
            max_delay: tau,
        },
    )?;
    let (r, y) = (&trace.signals[0], &trace.signals[1]);
    if divergence_detect(y, r, 10.0) {
        return Ok(f64::INFINITY);
    }
    ise(r, y, options.dt)
}

/// Coarse grid over the box (plus the extra candidates), then Nelder–Mead
/// from the best point; the result is never worse than any start.
pub fn tune_pi_ise(plant: &RationalTF, options: &IseTuneOptions) -> Result<IseTuneResult, CompensatorError> {
    if options.search.lower.len() != 2 || options.grid_points < 2 {
        return Err(CompensatorError::InvalidParameter("PI tuning needs a 2-D box and >= 2 grid points"));
    }
    let objective = |x: &[f64]| -> f64 {
        if !options.search.contains(x) {
            return f64::INFINITY;
        }
        PIParams::new(x[0], x[1])
            .ok()
            .and_then(|p| ise_of_pi(plant, p, options).ok())
            .unwrap_or(f64::INFINITY)
    };
    let mut starts = options.search.grid(options.grid_points);
    starts.extend(options.candidates.iter().map(|p| vec![p.kp, p.ki]));
    let mut best = (Vec::new(), f64::INFINITY);
    for x in &starts {
        let v = objective(x);
        if v < best.1 {
            best = (x.clone(), v);
        }
    }
    if !best.1.is_finite() {
        return Err(CompensatorError::NoStablePoint);
    }
    let step: Vec<f64> = options
        .search
        .lower
        .iter()
        .zip(&options.search.upper)
        .map(|(l, u)| 0.05 * (u - l))
        .collect();
    let refined = nelder_mead(objective, &best.0, &step, options.optimizer);
    let (x, value) = if refined.value <= best.1 {
        (refined.x, refined.value)
    } else {
        (best.0, best.1)
    };
    Ok(IseTuneResult {
        params: PIParams { kp: x[0], ki: x[1] },
        ise: value,
        best_start_ise: best.1,
        evaluations: starts.len() + refined.evals,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerStructure {
    /// Parameters `(Kp, KI)`.
    Pi,
    /// Parameters `(Kp, KI, omega_r)`.
    PiRolloff,
}

impl ControllerStructure {
    pub fn build(self, x: &[f64]) -> Result<RationalTF, CompensatorError> {
        let p = PIParams::new(x[0], x[1])?;
        match self {
            Self::Pi => Ok(pi_tf(p)),
            Self::PiRolloff => pi_rolloff_tf(p, x[2]),
        }
    }

    pub fn dimension(self) -> usize {
        match self {
            Self::Pi => 2,
            Self::PiRolloff => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustTuneConfig {
    pub structure: ControllerStructure,
    /// Box over the structure's parameters; searched in log coordinates,
    /// so every bound must be positive.
    pub search: SearchBox,
    pub w_p: RationalTF,
    pub w_l: RationalTF,
    pub grid: FrequencyGrid,
    pub grid_points: usize,
    pub optimizer: NelderMeadOptions,
}

impl RobustTuneConfig {
    /// PI over `Kp in [1e-3, 10]`, `KI in [1e-4, 10]`.
    pub fn new(w_p: RationalTF, w_l: RationalTF) -> Self {
        Self {
            structure: ControllerStructure::Pi,
            search: SearchBox::new(&[1e-3, 1e-4], &[10.0, 10.0]).unwrap(),
            w_p,
            w_l,
            grid: FrequencyGrid::default(),
            grid_points: 7,
            optimizer: NelderMeadOptions {
                max_evals: 600,
                f_tol: 1e-12,
                x_tol: 1e-9,
            },
        }
    }

    /// Adds a roll-off pole searched over `[0.01, 10]` rad/ms; the cap keeps
    /// the tuned loop simulable at a 0.01 ms step.
    pub fn with_rolloff(mut self) -> Self {
        self.structure = ControllerStructure::PiRolloff;
        self.search.lower.push(0.01);
        self.search.upper.push(10.0);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustTuneResult {
    pub structure: ControllerStructure,
    pub params: Vec<f64>,
    pub controller: RationalTF,
    pub norm: f64,
    pub rp_holds: bool,
}

/// Minimizes the mixed-sensitivity norm over the structure's parameters,
/// restricted to nominally stabilizing controllers.
pub fn tune_robust(plant: &RationalTF, config: &RobustTuneConfig) -> Result<RobustTuneResult, CompensatorError> {
    let dim = config.structure.dimension();
    if config.search.lower.len() != dim || config.search.lower.iter().any(|&l| l <= 0.0) || config.grid_points < 2 {
        return Err(CompensatorError::InvalidParameter("robust search box must be positive and match the structure"));
    }
    let log_box = SearchBox::new(
        &config.search.lower.iter().map(|v| v.ln()).collect::<Vec<_>>(),
        &config.search.upper.iter().map(|v| v.ln()).collect::<Vec<_>>(),
    )?;
    let objective = |z: &[f64]| -> f64 {
        if !log_box.contains(z) {
            return f64::INFINITY;
        }
        let x: Vec<f64> = z.iter().map(|v| v.exp()).collect();
        let Ok(c) = config.structure.build(&x) else {
            return f64::INFINITY;
        };
        if !stability_check(&closed_loop_polynomial(plant, &c)).unwrap_or(false) {
            return f64::INFINITY;
        }
        mixed_sensitivity_norm(plant, &c, &config.w_p, &config.w_l, &config.grid).unwrap_or(f64::INFINITY)
    };
    let mut best = (Vec::new(), f64::INFINITY);
    for z in log_box.grid(config.grid_points) {
        let v = objective(&z);
        if v < best.1 {
            best = (z, v);
        }
    }
    if !best.1.is_finite() {
        return Err(CompensatorError::Infeasible);
    }
    let refined = nelder_mead(objective, &best.0, &vec![0.3; dim], config.optimizer);
    let z = if refined.value <= best.1 { refined.x } else { best.0 };
    let params: Vec<f64> = z.iter().map(|v| v.exp()).collect();
    let controller = config.structure.build(&params)?;
    let norm = mixed_sensitivity_norm(plant, &controller, &config.w_p, &config.w_l, &config.grid)?;
    Ok(RobustTuneResult {
        structure: config.structure,
        params,
        controller,
        norm,
        rp_holds: rp_holds(norm),
    })
}
