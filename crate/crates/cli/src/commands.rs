use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use ubdnet::compensators::{pi_tf, tune_pi_ise, tune_robust, ControllerStructure};
use ubdnet::lti::{uncertainty_radius, FrequencyGrid, UncertainDelayPair};
use ubdnet::sim::{run_scenario, ScenarioConfig, ScenarioKind, ScenarioResult};
use ubdnet::topology::{
    assemble_burstiness_system, end_to_end_delay, identify_routes, solve_burstiness,
    BurstinessSolution, Route, SolveOptions, Topology,
};

use crate::config::ProjectConfig;
use crate::{CliError, Method};

/// Nine significant digits.
fn sig9(v: f64) -> String {
    format!("{v:.8e}")
}

/// Nine fractional digits; infinities spelled `inf`.
fn fixed9(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.9}")
    }
}

struct Analysis {
    topology: Topology,
    routes: Vec<Route>,
    solution: BurstinessSolution,
    ubd: Vec<f64>,
}

fn analyse(config: &ProjectConfig) -> Result<Analysis, CliError> {
    let (topology, streams) = config.network()?;
    let routes = identify_routes(&topology, &streams).map_err(|e| CliError::Schema(e.to_string()))?;
    let system = assemble_burstiness_system(&topology, &streams, &routes);
    let options = SolveOptions {
        max_iterations: config.network.max_iterations,
        tolerance: config.network.tolerance,
    };
    let solution = solve_burstiness(&system, options).map_err(|e| CliError::Netcalc(e.to_string()))?;
    let ubd = (0..streams.len())
        .map(|i| end_to_end_delay(i, &solution))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Netcalc(e.to_string()))?;
    Ok(Analysis {
        topology,
        routes,
        solution,
        ubd,
    })
}

/// Sensor and actuator bounds in the plant's time unit (ms).
fn control_delays(config: &ProjectConfig, analysis: &Analysis) -> Result<UncertainDelayPair, CliError> {
    let (s, a) = config.control_streams()?;
    UncertainDelayPair::from_seconds(analysis.ubd[s], analysis.ubd[a]).map_err(|e| CliError::Netcalc(e.to_string()))
}

pub fn bound(path: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let start = Instant::now();
    let config = ProjectConfig::load(path)?;
    let a = analyse(&config)?;
    let mut report = String::new();
    let mut csv = String::from("stream,ubd\n");
    writeln!(report, "{:<20} {:>16}", "stream", "ubd [s]").unwrap();
    for (i, ubd) in a.ubd.iter().enumerate() {
        let name = a.solution.stream_name(i);
        writeln!(report, "{name:<20} {:>16}", sig9(*ubd)).unwrap();
        writeln!(csv, "{name},{}", sig9(*ubd)).unwrap();
    }
    writeln!(report, "\ncomponents:").unwrap();
    for (i, route) in a.routes.iter().enumerate() {
        for (c, d) in route.components.iter().zip(a.solution.component_delays(i)) {
            writeln!(
                report,
                "  {:<18} {:<6} {:<24} {}",
                a.solution.stream_name(i),
                c.kind.to_string(),
                a.topology.port_label(c.egress).to_string(),
                sig9(d.value())
            )
            .unwrap();
        }
    }
    let capacities: Vec<f64> = a.topology.links().iter().flat_map(|l| [l.capacity_ab, l.capacity_ba]).collect();
    let (cmin, cmax) = capacities.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), &c| (lo.min(c), hi.max(c)));
    writeln!(report, "\nconverged after {} iterations, residual {:e} B", a.solution.iterations, a.solution.residual).unwrap();
    writeln!(report, "assumptions: sigma in bytes, rho and capacities in bytes/s (links {cmin:e}..{cmax:e} B/s); every switch crossing adds a multiplexer and an output queue").unwrap();
    writeln!(report, "elapsed {:.3} s", start.elapsed().as_secs_f64()).unwrap();
    print!("{report}");
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("bounds.csv"), csv)?;
    }
    Ok(())
}

fn series_csv(r: &ScenarioResult) -> String {
    let mut s = String::with_capacity(r.time.len() * 64);
    s.push_str("time,setpoint,output,control\n");
    for k in 0..r.time.len() {
        writeln!(
            s,
            "{},{},{},{}",
            fixed9(r.time[k]),
            fixed9(r.setpoint[k]),
            fixed9(r.output[k]),
            fixed9(r.control[k])
        )
        .unwrap();
    }
    s
}

pub fn simulate(path: &Path, out: &Path, seed: Option<u64>, scenarios: Option<&[String]>) -> Result<(), CliError> {
    let config = ProjectConfig::load(path)?;
    let kinds: Vec<ScenarioKind> = match scenarios {
        None => ScenarioKind::ALL.to_vec(),
        Some(list) => list
            .iter()
            .map(|s| s.trim().parse::<ScenarioKind>().map_err(CliError::Schema))
            .collect::<Result<_, _>>()?,
    };
    let plant = config.plant()?;
    let pi = pi_tf(config.pi()?);
    let analysis = analyse(&config)?;
    let delays = control_delays(&config, &analysis)?;
    let seed = seed.unwrap_or(config.control.seed);

    let robust = if kinds.contains(&ScenarioKind::Robust) {
        let tuned = tune_robust(&plant, &config.robust_config(delays.theta())?)
            .map_err(|e| CliError::Tuning(e.to_string()))?;
        Some(tuned.controller)
    } else {
        None
    };

    let c = &config.control;
    let configs: Vec<ScenarioConfig> = kinds
        .iter()
        .map(|&kind| {
            let controller = match kind {
                ScenarioKind::Robust => robust.clone().unwrap(),
                _ => pi.clone(),
            };
            ScenarioConfig {
                setpoint: c.setpoint,
                dt: c.dt,
                horizon: c.horizon,
                sample_period: c.sample_period,
                divergence_multiplier: c.divergence_multiplier,
                ..ScenarioConfig::new(kind, plant.clone(), controller, delays, seed)
            }
        })
        .collect();
    // independent runs; each is deterministic on its own
    let results: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs.iter().map(|cfg| scope.spawn(move || run_scenario(cfg))).collect();
        handles.into_iter().map(|h| h.join().expect("scenario thread panicked")).collect()
    });

    fs::create_dir_all(out)?;
    let mut summary = String::from("scenario,ise,unstable,seed,ubd1,ubd2\n");
    for result in results {
        let r = result.map_err(|e| CliError::Simulation(e.to_string()))?;
        fs::write(out.join(format!("{}.csv", r.kind)), series_csv(&r))?;
        writeln!(
            summary,
            "{},{},{},{},{},{}",
            r.kind,
            fixed9(r.ise),
            r.unstable,
            r.seed,
            sig9(r.delays.sensor() / 1e3),
            sig9(r.delays.actuator() / 1e3)
        )
        .unwrap();
        println!("{:<18} ise {:>14} unstable {}", r.kind, fixed9(r.ise), r.unstable);
    }
    fs::write(out.join("summary.csv"), summary)?;
    Ok(())
}

pub fn tune(path: &Path, method: Method) -> Result<(), CliError> {
    let config = ProjectConfig::load(path)?;
    let plant = config.plant()?;
    match method {
        Method::Ise => {
            let options = config.ise_options()?;
            let reference = config.pi()?;
            let reference_ise = ubdnet::compensators::ise_of_pi(&plant, reference, &options)
                .map_err(|e| CliError::Tuning(e.to_string()))?;
            let r = tune_pi_ise(&plant, &options).map_err(|e| CliError::Tuning(e.to_string()))?;
            println!("method ise");
            println!("kp {}", sig9(r.params.kp));
            println!("ki {}", sig9(r.params.ki));
            println!("ise {}", fixed9(r.ise));
            println!("reference kp {} ki {} ise {}", sig9(reference.kp), sig9(reference.ki), fixed9(reference_ise));
            println!("delay each path {} ms, horizon {} ms", options.delay_each_path, options.horizon);
        }
        Method::Robust => {
            let theta = match config.control.theta {
                Some(t) => t,
                None => control_delays(&config, &analyse(&config)?)?.theta(),
            };
            let cfg = config.robust_config(theta)?;
            let r = tune_robust(&plant, &cfg).map_err(|e| CliError::Tuning(e.to_string()))?;
            println!("method robust");
            println!(
                "structure {}",
                match r.structure {
                    ControllerStructure::Pi => "pi",
                    ControllerStructure::PiRolloff => "pi-rolloff",
                }
            );
            let names = ["kp", "ki", "omega_r"];
            for (name, v) in names.iter().zip(&r.params) {
                println!("{name} {}", sig9(*v));
            }
            println!("theta {} ms", sig9(theta));
            println!("norm {}", sig9(r.norm));
            println!("rp_holds {}", r.rp_holds);
        }
    }
    Ok(())
}

pub fn weights(path: &Path, out: &Path) -> Result<(), CliError> {
    let config = ProjectConfig::load(path)?;
    let theta = match config.control.theta {
        Some(t) => t,
        None => control_delays(&config, &analyse(&config)?)?.theta(),
    };
    let (w_p, w_l) = config.weights(theta)?;
    let mut csv = String::from("omega,l_radius,w_l_mag,w_p_mag\n");
    for &w in FrequencyGrid::default().omegas() {
        let wl = w_l.freq_response(w).map_err(|e| CliError::Schema(e.to_string()))?.norm();
        let wp = w_p.freq_response(w).map_err(|e| CliError::Schema(e.to_string()))?.norm();
        writeln!(csv, "{},{},{},{}", sig9(w), sig9(uncertainty_radius(w, theta)), sig9(wl), sig9(wp)).unwrap();
    }
    if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(out, csv)?;
    Ok(())
}
