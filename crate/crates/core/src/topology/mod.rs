//! Switched Ethernet topologies, stream routing and end-to-end delay bounds.
//!
//! The network is a tree of stations and switches joined by full-duplex
//! links. Every switch output port is a FIFO multiplexer followed by a FIFO
//! queue; every input port is a demultiplexer. Streams are routed along the
//! unique path of the tree, their burstiness is propagated component by
//! component, and the end-to-end bound of a stream is its accumulated burst
//! growth divided by its rate.

mod burstiness;
mod fluid;
mod routes;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::netcalc::{ArrivalEnvelope, NetcalcError};

pub use burstiness::{
    assemble_burstiness_system, end_to_end_delay, solve_burstiness, BurstinessSolution,
    BurstinessSystem, ComponentRef, Equation, Member, MuxGroup, MuxNode, QueueNode, SolveOptions,
};
pub use fluid::{default_fluid_horizon, default_fluid_step, fluid_worst_case_oracle};
pub use routes::{identify_routes, Route, RouteComponent};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("link graph is not a tree: {0}")]
    NotATree(String),
    #[error("duplicate node name `{0}`")]
    DuplicateNode(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("invalid capacity {capacity} on link {a} <-> {b}")]
    InvalidCapacity { a: String, b: String, capacity: f64 },
    #[error("station `{0}` must have exactly one link")]
    StationDegree(String),
    #[error("invalid stream `{stream}`: {reason}")]
    InvalidStream { stream: String, reason: String },
    #[error("stream `{0}` has no path to its destination")]
    Unreachable(String),
    #[error("port {port} is overloaded: load {load} B/s >= capacity {capacity} B/s")]
    Overloaded {
        port: String,
        load: f64,
        capacity: f64,
    },
    #[error("burstiness iteration did not converge after {iterations} iterations (residual {residual} B)")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("stream `{0}` has zero rate; its delay cannot be recovered from burst growth")]
    ZeroRate(String),
    #[error(transparent)]
    Netcalc(#[from] NetcalcError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeKind {
    Station,
    /// A switch. `fabric_capacity` is the rate at which an output multiplexer
    /// feeds its queue; `None` means the output link rate.
    Switch { fabric_capacity: Option<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub name: String,
    pub kind: NodeKind,
}

/// Full-duplex link with one capacity per direction (bytes/second).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub a: NodeId,
    pub b: NodeId,
    pub capacity_ab: f64,
    pub capacity_ba: f64,
}

/// Egress direction of a link: data leaving `from` towards `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Port {
    pub from: NodeId,
    pub to: NodeId,
}

#[derive(Debug, Clone)]
pub struct Topology {
    nodes: Vec<Node>,
    links: Vec<Link>,
    adjacency: Vec<Vec<NodeId>>,
    capacities: HashMap<Port, f64>,
}

impl Topology {
    /// Validates and builds a topology. The link graph must be a tree, every
    /// capacity positive, and every station a leaf.
    pub fn new(nodes: Vec<Node>, links: Vec<Link>) -> Result<Self, TopologyError> {
        let mut seen = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if seen.insert(n.name.clone(), i).is_some() {
                return Err(TopologyError::DuplicateNode(n.name.clone()));
            }
            if let NodeKind::Switch {
                fabric_capacity: Some(c),
            } = n.kind
            {
                if !(c > 0.0 && c.is_finite()) {
                    return Err(TopologyError::InvalidCapacity {
                        a: n.name.clone(),
                        b: n.name.clone(),
                        capacity: c,
                    });
                }
            }
        }
        if nodes.is_empty() {
            return Err(TopologyError::NotATree("no nodes".into()));
        }
        let mut adjacency = vec![Vec::new(); nodes.len()];
        let mut capacities = HashMap::new();
        for l in &links {
            for id in [l.a, l.b] {
                if id.0 >= nodes.len() {
                    return Err(TopologyError::UnknownNode(format!("#{}", id.0)));
                }
            }
            let names = || (nodes[l.a.0].name.clone(), nodes[l.b.0].name.clone());
            if l.a == l.b {
                return Err(TopologyError::NotATree(format!("self-loop at `{}`", names().0)));
            }
            for c in [l.capacity_ab, l.capacity_ba] {
                if !(c > 0.0 && c.is_finite()) {
                    let (a, b) = names();
                    return Err(TopologyError::InvalidCapacity { a, b, capacity: c });
                }
            }
            let ab = Port { from: l.a, to: l.b };
            let ba = Port { from: l.b, to: l.a };
            if capacities.insert(ab, l.capacity_ab).is_some() {
                let (a, b) = names();
                return Err(TopologyError::NotATree(format!("parallel links {a} <-> {b}")));
            }
            capacities.insert(ba, l.capacity_ba);
            adjacency[l.a.0].push(l.b);
            adjacency[l.b.0].push(l.a);
        }
        if links.len() + 1 != nodes.len() {
            return Err(TopologyError::NotATree(format!(
                "{} nodes need {} links, found {}",
                nodes.len(),
                nodes.len() - 1,
                links.len()
            )));
        }
        // n-1 edges + connected => tree
        let mut visited = vec![false; nodes.len()];
        let mut stack = vec![0usize];
        visited[0] = true;
        while let Some(u) = stack.pop() {
            for v in &adjacency[u] {
                if !visited[v.0] {
                    visited[v.0] = true;
                    stack.push(v.0);
                }
            }
        }
        if let Some(i) = visited.iter().position(|v| !v) {
            return Err(TopologyError::NotATree(format!(
                "`{}` is disconnected",
                nodes[i].name
            )));
        }
        if nodes.len() > 1 {
            for (i, n) in nodes.iter().enumerate() {
                if n.kind == NodeKind::Station && adjacency[i].len() != 1 {
                    return Err(TopologyError::StationDegree(n.name.clone()));
                }
            }
        }
        for adj in adjacency.iter_mut() {
            adj.sort();
        }
        Ok(Self {
            nodes,
            links,
            adjacency,
            capacities,
        })
    }

    pub fn builder() -> TopologyBuilder {
        TopologyBuilder::default()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.name == name).map(NodeId)
    }

    pub fn neighbors(&self, id: NodeId) -> &[NodeId] {
        &self.adjacency[id.0]
    }

    pub fn is_switch(&self, id: NodeId) -> bool {
        matches!(self.nodes[id.0].kind, NodeKind::Switch { .. })
    }

    /// Capacity of the link direction `from -> to`.
    pub fn capacity(&self, from: NodeId, to: NodeId) -> Option<f64> {
        self.capacities.get(&Port { from, to }).copied()
    }

    /// Rate at which the multiplexer of output port `port` is drained.
    pub fn mux_rate(&self, port: Port) -> Option<f64> {
        let link = self.capacity(port.from, port.to)?;
        match self.nodes[port.from.0].kind {
            NodeKind::Switch {
                fabric_capacity: Some(f),
            } => Some(f),
            _ => Some(link),
        }
    }

    pub fn port_label(&self, port: Port) -> String {
        format!("{}->{}", self.nodes[port.from.0].name, self.nodes[port.to.0].name)
    }
}

/// Convenience builder for tests and programmatic construction.
#[derive(Debug, Default)]
pub struct TopologyBuilder {
    nodes: Vec<Node>,
    links: Vec<Link>,
}

impl TopologyBuilder {
    pub fn station(&mut self, name: &str) -> NodeId {
        self.nodes.push(Node {
            name: name.to_string(),
            kind: NodeKind::Station,
        });
        NodeId(self.nodes.len() - 1)
    }

    pub fn switch(&mut self, name: &str) -> NodeId {
        self.switch_with_fabric(name, None)
    }

    pub fn switch_with_fabric(&mut self, name: &str, fabric_capacity: Option<f64>) -> NodeId {
        self.nodes.push(Node {
            name: name.to_string(),
            kind: NodeKind::Switch { fabric_capacity },
        });
        NodeId(self.nodes.len() - 1)
    }

    /// Adds a symmetric link.
    pub fn link(&mut self, a: NodeId, b: NodeId, capacity: f64) -> &mut Self {
        self.links.push(Link {
            a,
            b,
            capacity_ab: capacity,
            capacity_ba: capacity,
        });
        self
    }

    pub fn build(self) -> Result<Topology, TopologyError> {
        Topology::new(self.nodes, self.links)
    }
}

/// A unicast stream between two stations.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamSpec {
    pub name: String,
    pub source: NodeId,
    pub destination: NodeId,
    /// Envelope at the source, `(sigma0, rho)`.
    pub envelope: ArrivalEnvelope,
    /// Maximum frame length in bytes.
    pub max_frame_len: f64,
}

impl StreamSpec {
    pub fn new(
        name: &str,
        source: NodeId,
        destination: NodeId,
        envelope: ArrivalEnvelope,
        max_frame_len: f64,
    ) -> Self {
        Self {
            name: name.to_string(),
            source,
            destination,
            envelope,
            max_frame_len,
        }
    }

    pub(crate) fn validate(&self, topology: &Topology) -> Result<(), TopologyError> {
        let invalid = |reason: &str| TopologyError::InvalidStream {
            stream: self.name.clone(),
            reason: reason.to_string(),
        };
        let n = topology.nodes().len();
        if self.source.0 >= n || self.destination.0 >= n {
            return Err(invalid("endpoint does not exist"));
        }
        if self.source == self.destination {
            return Err(invalid("source equals destination"));
        }
        if topology.is_switch(self.source) || topology.is_switch(self.destination) {
            return Err(invalid("endpoints must be stations"));
        }
        if !(self.max_frame_len > 0.0 && self.max_frame_len.is_finite()) {
            return Err(invalid("max frame length must be > 0"));
        }
        Ok(())
    }
}

impl fmt::Display for Port {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}->#{}", self.from.0, self.to.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_cycles_and_disconnection() {
        let mut b = Topology::builder();
        let s1 = b.switch("s1");
        let s2 = b.switch("s2");
        let s3 = b.switch("s3");
        b.link(s1, s2, 1.0).link(s2, s3, 1.0).link(s3, s1, 1.0);
        assert!(matches!(b.build(), Err(TopologyError::NotATree(_))));

        let mut b = Topology::builder();
        let s1 = b.switch("s1");
        let s2 = b.switch("s2");
        b.switch("s3");
        b.switch("s4");
        b.link(s1, s2, 1.0);
        assert!(matches!(b.build(), Err(TopologyError::NotATree(_))));
    }

    #[test]
    fn rejects_bad_capacity_and_duplicates() {
        let mut b = Topology::builder();
        let a = b.station("a");
        let s = b.switch("s");
        b.link(a, s, 0.0);
        assert!(matches!(b.build(), Err(TopologyError::InvalidCapacity { .. })));

        let mut b = Topology::builder();
        b.station("a");
        b.station("a");
        assert!(matches!(b.build(), Err(TopologyError::DuplicateNode(_))));
    }

    #[test]
    fn stations_are_leaves() {
        let mut b = Topology::builder();
        let a = b.station("a");
        let m = b.station("m");
        let c = b.station("c");
        b.link(a, m, 1.0).link(m, c, 1.0);
        assert!(matches!(b.build(), Err(TopologyError::StationDegree(n)) if n == "m"));
    }

    #[test]
    fn capacities_and_fabric() {
        let mut b = Topology::builder();
        let a = b.station("a");
        let s = b.switch_with_fabric("s", Some(5.0));
        b.link(a, s, 2.0);
        let t = b.build().unwrap();
        assert_eq!(t.capacity(a, s), Some(2.0));
        assert_eq!(t.mux_rate(Port { from: s, to: a }), Some(5.0));
        assert_eq!(t.mux_rate(Port { from: a, to: s }), Some(2.0));
        assert_eq!(t.port_label(Port { from: s, to: a }), "s->a");
        assert_eq!(t.node_id("s"), Some(s));
    }
}
