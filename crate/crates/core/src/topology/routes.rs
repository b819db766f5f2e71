use std::collections::VecDeque;

use super::{NodeId, Port, StreamSpec, Topology, TopologyError};
use crate::netcalc::ComponentKind;

/// One component crossed by a stream inside a switch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteComponent {
    pub kind: ComponentKind,
    pub switch: NodeId,
    /// Neighbor the stream arrives from.
    pub ingress_from: NodeId,
    /// Output port the stream leaves through.
    pub egress: Port,
    pub in_capacity: f64,
    pub out_capacity: f64,
}

/// Path of a stream through the tree with its per-switch components, in
/// traversal order: demultiplexer, multiplexer, queue for every switch.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub stream: usize,
    pub nodes: Vec<NodeId>,
    pub components: Vec<RouteComponent>,
}

impl Route {
    /// Number of switches crossed.
    pub fn switch_hops(&self) -> usize {
        self.nodes.len().saturating_sub(2)
    }

    /// Components that can delay traffic (multiplexers and queues).
    pub fn delay_components(&self) -> impl Iterator<Item = &RouteComponent> {
        self.components
            .iter()
            .filter(|c| c.kind != ComponentKind::Demultiplexer)
    }
}

fn tree_path(topology: &Topology, from: NodeId, to: NodeId) -> Option<Vec<NodeId>> {
    let n = topology.nodes().len();
    let mut parent = vec![usize::MAX; n];
    let mut queue = VecDeque::from([from]);
    parent[from.0] = from.0;
    while let Some(u) = queue.pop_front() {
        if u == to {
            break;
        }
        for &v in topology.neighbors(u) {
            if parent[v.0] == usize::MAX {
                parent[v.0] = u.0;
                queue.push_back(v);
            }
        }
    }
    if parent[to.0] == usize::MAX {
        return None;
    }
    let mut path = vec![to];
    let mut cur = to;
    while cur != from {
        cur = NodeId(parent[cur.0]);
        path.push(cur);
    }
    path.reverse();
    Some(path)
}

/// Routes every stream along the unique tree path from source to destination.
pub fn identify_routes(
    topology: &Topology,
    streams: &[StreamSpec],
) -> Result<Vec<Route>, TopologyError> {
    streams
        .iter()
        .enumerate()
        .map(|(idx, s)| {
            s.validate(topology)?;
            let nodes = tree_path(topology, s.source, s.destination)
                .ok_or_else(|| TopologyError::Unreachable(s.name.clone()))?;
            let mut components = Vec::with_capacity(3 * nodes.len().saturating_sub(2));
            for w in nodes.windows(3) {
                let (prev, sw, next) = (w[0], w[1], w[2]);
                if !topology.is_switch(sw) {
                    return Err(TopologyError::InvalidStream {
                        stream: s.name.clone(),
                        reason: format!("path crosses station `{}`", topology.node(sw).name),
                    });
                }
                let egress = Port { from: sw, to: next };
                // both lookups exist: prev-sw and sw-next are tree edges
                let c_in = topology.capacity(prev, sw).unwrap();
                let c_link = topology.capacity(sw, next).unwrap();
                let c_mux = topology.mux_rate(egress).unwrap();
                let base = RouteComponent {
                    kind: ComponentKind::Demultiplexer,
                    switch: sw,
                    ingress_from: prev,
                    egress,
                    in_capacity: c_in,
                    out_capacity: c_in,
                };
                components.push(base);
                components.push(RouteComponent {
                    kind: ComponentKind::Multiplexer,
                    out_capacity: c_mux,
                    ..base
                });
                components.push(RouteComponent {
                    kind: ComponentKind::Queue,
                    in_capacity: c_mux,
                    out_capacity: c_link,
                    ..base
                });
            }
            Ok(Route {
                stream: idx,
                nodes,
                components,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcalc::ArrivalEnvelope;

    fn env() -> ArrivalEnvelope {
        ArrivalEnvelope::new(100.0, 1000.0).unwrap()
    }

    #[test]
    fn direct_station_link_has_no_components() {
        let mut b = Topology::builder();
        let a = b.station("a");
        let c = b.station("c");
        b.link(a, c, 10.0);
        let t = b.build().unwrap();
        let r = identify_routes(&t, &[StreamSpec::new("x", a, c, env(), 64.0)]).unwrap();
        assert!(r[0].components.is_empty());
        assert_eq!(r[0].switch_hops(), 0);
    }

    #[test]
    fn rejects_bad_streams() {
        let mut b = Topology::builder();
        let a = b.station("a");
        let s = b.switch("s");
        b.link(a, s, 10.0);
        let t = b.build().unwrap();
        let same = StreamSpec::new("x", a, a, env(), 64.0);
        assert!(identify_routes(&t, &[same]).is_err());
        let to_switch = StreamSpec::new("y", a, s, env(), 64.0);
        assert!(identify_routes(&t, &[to_switch]).is_err());
        let missing = StreamSpec::new("z", a, NodeId(9), env(), 64.0);
        assert!(identify_routes(&t, &[missing]).is_err());
    }
}
