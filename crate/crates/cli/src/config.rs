//! TOML project file: network, streams and control-loop settings.

use std::collections::HashMap;
use std::path::Path;

use serde::Deserialize;
use ubdnet::compensators::{
    ControllerStructure, IseTuneOptions, PIParams, RobustTuneConfig, SearchBox,
};
use ubdnet::lti::{delay_weight, perf_weight, RationalTF};
use ubdnet::netcalc::ArrivalEnvelope;
use ubdnet::topology::{Link, Node, NodeKind, StreamSpec, Topology};

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    #[serde(default)]
    pub network: NetworkSection,
    pub nodes: Vec<NodeEntry>,
    pub links: Vec<LinkEntry>,
    pub streams: Vec<StreamEntry>,
    #[serde(default)]
    pub control: ControlSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    /// Bytes/second, used by links without their own capacity.
    #[serde(default = "default_capacity")]
    pub default_capacity: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

impl Default for NetworkSection {
    fn default() -> Self {
        Self {
            default_capacity: default_capacity(),
            max_iterations: default_max_iterations(),
            tolerance: default_tolerance(),
        }
    }
}

fn default_capacity() -> f64 {
    1.25e6
}
fn default_max_iterations() -> usize {
    1000
}
fn default_tolerance() -> f64 {
    1e-9
}

#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum NodeKindEntry {
    Station,
    Switch,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeEntry {
    pub name: String,
    pub kind: NodeKindEntry,
    pub fabric_capacity: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkEntry {
    pub a: String,
    pub b: String,
    /// a -> b, and b -> a unless `capacity_reverse` is given.
    pub capacity: Option<f64>,
    pub capacity_reverse: Option<f64>,
}

#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum StreamRole {
    ControlSensor,
    ControlActuator,
    Background,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamEntry {
    pub name: String,
    pub source: String,
    pub destination: String,
    pub sigma: f64,
    pub rho: f64,
    pub max_frame: f64,
    #[serde(default = "default_role")]
    pub role: StreamRole,
}

fn default_role() -> StreamRole {
    StreamRole::Background
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlSection {
    pub time_unit: String,
    pub plant_num: Vec<f64>,
    pub plant_den: Vec<f64>,
    pub kp: f64,
    pub ki: f64,
    pub dt: f64,
    pub horizon: f64,
    pub sample_period: f64,
    pub setpoint: f64,
    pub divergence_multiplier: f64,
    pub seed: u64,
    /// Overrides the round-trip delay bound used by the weights, in ms.
    pub theta: Option<f64>,
    pub weights: WeightsSection,
    pub ise_tuning: IseSection,
    pub robust_tuning: RobustSection,
}

impl Default for ControlSection {
    fn default() -> Self {
        Self {
            time_unit: "ms".into(),
            plant_num: vec![2.0],
            plant_den: vec![1.0, 5.2, 1.0],
            kp: 0.5508,
            ki: 0.4529,
            dt: 0.01,
            horizon: 200.0,
            sample_period: 0.1,
            setpoint: 1.0,
            divergence_multiplier: 10.0,
            seed: 1,
            theta: None,
            weights: WeightsSection::default(),
            ise_tuning: IseSection::default(),
            robust_tuning: RobustSection::default(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightsSection {
    pub m: f64,
    pub omega_b: f64,
    pub a: f64,
}

impl Default for WeightsSection {
    fn default() -> Self {
        Self {
            m: 2.0,
            omega_b: 0.02,
            a: 1e-4,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IseSection {
    pub delay_each_path: f64,
    pub horizon: f64,
    pub kp: [f64; 2],
    pub ki: [f64; 2],
    pub grid_points: usize,
    pub max_evals: usize,
}

impl Default for IseSection {
    fn default() -> Self {
        let d = IseTuneOptions::default();
        Self {
            delay_each_path: d.delay_each_path,
            horizon: d.horizon,
            kp: [d.search.lower[0], d.search.upper[0]],
            ki: [d.search.lower[1], d.search.upper[1]],
            grid_points: d.grid_points,
            max_evals: d.optimizer.max_evals,
        }
    }
}

#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum StructureEntry {
    Pi,
    PiRolloff,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RobustSection {
    pub structure: StructureEntry,
    pub kp: [f64; 2],
    pub ki: [f64; 2],
    pub omega_r: [f64; 2],
    pub grid_points: usize,
    pub max_evals: usize,
}

impl Default for RobustSection {
    fn default() -> Self {
        Self {
            structure: StructureEntry::Pi,
            kp: [1e-3, 10.0],
            ki: [1e-4, 10.0],
            omega_r: [0.01, 10.0],
            grid_points: 7,
            max_evals: 600,
        }
    }
}

fn schema(msg: impl Into<String>) -> CliError {
    CliError::Schema(msg.into())
}

impl ProjectConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| schema(format!("cannot read {}: {e}", path.display())))?;
        let config: Self = toml::from_str(&text).map_err(|e| schema(e.to_string()))?;
        if config.control.time_unit != "ms" {
            return Err(schema("control.time_unit: only \"ms\" is supported"));
        }
        Ok(config)
    }

    pub fn network(&self) -> Result<(Topology, Vec<StreamSpec>), CliError> {
        let nodes: Vec<Node> = self
            .nodes
            .iter()
            .map(|n| Node {
                name: n.name.clone(),
                kind: match n.kind {
                    NodeKindEntry::Station => NodeKind::Station,
                    NodeKindEntry::Switch => NodeKind::Switch {
                        fabric_capacity: n.fabric_capacity,
                    },
                },
            })
            .collect();
        if let Some(n) = self.nodes.iter().find(|n| n.kind == NodeKindEntry::Station && n.fabric_capacity.is_some()) {
            return Err(schema(format!("station `{}` cannot have a fabric capacity", n.name)));
        }
        let index: HashMap<&str, usize> = self.nodes.iter().enumerate().map(|(i, n)| (n.name.as_str(), i)).collect();
        let lookup = |name: &str| {
            index
                .get(name)
                .map(|&i| ubdnet::topology::NodeId(i))
                .ok_or_else(|| schema(format!("unknown node `{name}`")))
        };
        let mut links = Vec::with_capacity(self.links.len());
        for l in &self.links {
            let ab = l.capacity.unwrap_or(self.network.default_capacity);
            links.push(Link {
                a: lookup(&l.a)?,
                b: lookup(&l.b)?,
                capacity_ab: ab,
                capacity_ba: l.capacity_reverse.unwrap_or(ab),
            });
        }
        let topology = Topology::new(nodes, links).map_err(|e| schema(e.to_string()))?;
        let streams = self
            .streams
            .iter()
            .map(|s| {
                let env = ArrivalEnvelope::new(s.sigma, s.rho)
                    .map_err(|e| schema(format!("stream `{}`: {e}", s.name)))?;
                Ok(StreamSpec::new(&s.name, lookup(&s.source)?, lookup(&s.destination)?, env, s.max_frame))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok((topology, streams))
    }

    /// Indices of the sensor and actuator streams.
    pub fn control_streams(&self) -> Result<(usize, usize), CliError> {
        let find = |role: StreamRole, label: &str| {
            let hits: Vec<usize> = self
                .streams
                .iter()
                .enumerate()
                .filter(|(_, s)| s.role == role)
                .map(|(i, _)| i)
                .collect();
            match hits.as_slice() {
                [i] => Ok(*i),
                _ => Err(schema(format!("expected exactly one {label} stream, found {}", hits.len()))),
            }
        };
        Ok((find(StreamRole::ControlSensor, "control-sensor")?, find(StreamRole::ControlActuator, "control-actuator")?))
    }

    pub fn plant(&self) -> Result<RationalTF, CliError> {
        let c = &self.control;
        let p = RationalTF::new(&c.plant_num, &c.plant_den).map_err(|e| schema(format!("control plant: {e}")))?;
        if !p.is_strictly_proper() {
            return Err(schema("control plant must be strictly proper"));
        }
        Ok(p)
    }

    pub fn pi(&self) -> Result<PIParams, CliError> {
        PIParams::new(self.control.kp, self.control.ki).map_err(|e| schema(format!("control gains: {e}")))
    }

    pub fn weights(&self, theta: f64) -> Result<(RationalTF, RationalTF), CliError> {
        let w = &self.control.weights;
        let w_p = perf_weight(w.m, w.omega_b, w.a).map_err(|e| schema(format!("control.weights: {e}")))?;
        let w_l = delay_weight(theta).map_err(|e| schema(format!("delay weight: {e}")))?;
        Ok((w_p, w_l))
    }

    pub fn ise_options(&self) -> Result<IseTuneOptions, CliError> {
        let s = &self.control.ise_tuning;
        let mut o = IseTuneOptions {
            delay_each_path: s.delay_each_path,
            horizon: s.horizon,
            dt: self.control.dt,
            search: SearchBox::new(&[s.kp[0], s.ki[0]], &[s.kp[1], s.ki[1]])
                .map_err(|e| schema(format!("control.ise_tuning: {e}")))?,
            grid_points: s.grid_points,
            ..IseTuneOptions::default()
        };
        o.candidates = vec![self.pi()?];
        o.optimizer.max_evals = s.max_evals;
        Ok(o)
    }

    pub fn robust_config(&self, theta: f64) -> Result<RobustTuneConfig, CliError> {
        let (w_p, w_l) = self.weights(theta)?;
        let s = &self.control.robust_tuning;
        let mut cfg = RobustTuneConfig::new(w_p, w_l);
        let (lower, upper) = match s.structure {
            StructureEntry::Pi => (vec![s.kp[0], s.ki[0]], vec![s.kp[1], s.ki[1]]),
            StructureEntry::PiRolloff => {
                cfg.structure = ControllerStructure::PiRolloff;
                (vec![s.kp[0], s.ki[0], s.omega_r[0]], vec![s.kp[1], s.ki[1], s.omega_r[1]])
            }
        };
        if lower.iter().any(|&v| v <= 0.0) {
            return Err(schema("control.robust_tuning: bounds must be positive"));
        }
        cfg.search = SearchBox::new(&lower, &upper).map_err(|e| schema(format!("control.robust_tuning: {e}")))?;
        cfg.grid_points = s.grid_points;
        cfg.optimizer.max_evals = s.max_evals;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [[nodes]]
        name = "a"
        kind = "station"
        [[nodes]]
        name = "b"
        kind = "station"
        [[nodes]]
        name = "s"
        kind = "switch"
        [[links]]
        a = "a"
        b = "s"
        capacity = 2e6
        capacity_reverse = 1e6
        [[links]]
        a = "s"
        b = "b"
        [[streams]]
        name = "x"
        source = "a"
        destination = "b"
        sigma = 100
        rho = 1000
        max_frame = 100
        role = "control-sensor"
        [[streams]]
        name = "y"
        source = "b"
        destination = "a"
        sigma = 100
        rho = 1000
        max_frame = 100
        role = "control-actuator"
    "#;

    #[test]
    fn minimal_file_takes_defaults() {
        let c: ProjectConfig = toml::from_str(MINIMAL).unwrap();
        assert_eq!(c.network.default_capacity, 1.25e6);
        assert_eq!(c.control.kp, 0.5508);
        assert_eq!(c.control_streams().unwrap(), (0, 1));
        let (t, streams) = c.network().unwrap();
        assert_eq!(streams.len(), 2);
        assert_eq!(t.links()[0].capacity_ab, 2e6);
        assert_eq!(t.links()[0].capacity_ba, 1e6);
        assert_eq!(t.links()[1].capacity_ba, 1.25e6);
    }

    #[test]
    fn shipped_example_parses() {
        let text = include_str!("../examples/single-switch.toml");
        let c: ProjectConfig = toml::from_str(text).unwrap();
        assert_eq!(c.streams.len(), 6);
        assert!(c.robust_config(5.8).is_ok());
        assert!(c.ise_options().is_ok());
    }

    #[test]
    fn rejects_fabric_on_station() {
        let text = MINIMAL.replacen("kind = \"station\"", "kind = \"station\"\nfabric_capacity = 1e7", 1);
        let c: ProjectConfig = toml::from_str(&text).unwrap();
        assert!(matches!(c.network(), Err(CliError::Schema(_))));
    }

    #[test]
    fn improper_plant_is_rejected() {
        let text = format!("{MINIMAL}\n[control]\nplant_num = [1.0, 0.0]\nplant_den = [1.0, 1.0]\n");
        let c: ProjectConfig = toml::from_str(&text).unwrap();
        assert!(c.plant().is_err());
    }
}
