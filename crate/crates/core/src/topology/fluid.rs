//! Fluid worst-case oracle.
//!
//! Every source releases its whole burst at `t = 0` and then emits at its
//! sustained rate. Traffic is treated as a fluid crossing FIFO servers: the
//! station egress link, then each switch output multiplexer (and its queue
//! when the switch fabric runs faster than the output link). The observed
//! per-stream delay, measured from switch ingress to final egress, is a lower
//! bound on the true worst case and therefore must never exceed the analytic
//! bound.

use std::collections::BTreeMap;

use super::{identify_routes, NodeId, Port, StreamSpec, Topology, TopologyError};
use crate::netcalc::ComponentKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum ServerKey {
    Egress(NodeId),
    Mux(Port),
    Queue(Port),
}

/// Cumulative-curve samples on the shared time grid.
type Curve = Vec<f64>;

/// `(min frame length / max link capacity) / 10`.
pub fn default_fluid_step(topology: &Topology, streams: &[StreamSpec]) -> f64 {
    let min_l = streams
        .iter()
        .map(|s| s.max_frame_len)
        .fold(f64::INFINITY, f64::min);
    let max_c = topology
        .links()
        .iter()
        .flat_map(|l| [l.capacity_ab, l.capacity_ba])
        .fold(0.0, f64::max);
    min_l / max_c / 10.0
}

/// A horizon long enough for every busy period started by the initial
/// bursts to drain, assuming the network is not overloaded.
pub fn default_fluid_horizon(topology: &Topology, streams: &[StreamSpec]) -> f64 {
    let total_burst: f64 = streams.iter().map(|s| s.envelope.sigma()).sum();
    let total_rate: f64 = streams.iter().map(|s| s.envelope.rho()).sum();
    let min_c = topology
        .links()
        .iter()
        .flat_map(|l| [l.capacity_ab, l.capacity_ba])
        .fold(f64::INFINITY, f64::min);
    let headroom = (min_c - total_rate).max(0.05 * min_c);
    let depth = topology.nodes().len() as f64;
    4.0 * depth * total_burst.max(1.0) / headroom
}

/// FIFO fluid server of rate `capacity` on the grid `times`.
fn serve(times: &[f64], capacity: f64, inputs: &[&Curve]) -> Vec<Curve> {
    let n = times.len();
    let agg: Vec<f64> = (0..n).map(|j| inputs.iter().map(|c| c[j]).sum()).collect();
    let mut dep = vec![0.0; n];
    for j in 1..n {
        dep[j] = (dep[j - 1] + capacity * (times[j] - times[j - 1])).min(agg[j]);
    }
    // FIFO: the fluid leaving at t_j arrived when the aggregate reached dep[j]
    let mut outputs = vec![vec![0.0; n]; inputs.len()];
    let mut m = 0;
    for j in 0..n {
        let x = dep[j];
        while m < n && agg[m] < x {
            m += 1;
        }
        if m == 0 {
            for (out, inp) in outputs.iter_mut().zip(inputs) {
                out[j] = inp[0];
            }
            continue;
        }
        let m = m.min(n - 1);
        let frac = ((x - agg[m - 1]) / (agg[m] - agg[m - 1])).clamp(0.0, 1.0);
        for (out, inp) in outputs.iter_mut().zip(inputs) {
            out[j] = inp[m - 1] + frac * (inp[m] - inp[m - 1]);
        }
    }
    outputs
}

/// Earliest time at which `curve` reaches `level`, or `None` within the grid.
fn first_reach(times: &[f64], curve: &[f64], level: f64, start: &mut usize) -> Option<f64> {
    while *start < curve.len() && curve[*start] < level {
        *start += 1;
    }
    let m = *start;
    if m >= curve.len() {
        return None;
    }
    if m == 0 || curve[m] == curve[m - 1] {
        return Some(times[m]);
    }
    let frac = (level - curve[m - 1]) / (curve[m] - curve[m - 1]);
    Some(times[m - 1] + frac * (times[m] - times[m - 1]))
}

fn horizontal_deviation(times: &[f64], arrival: &[f64], departure: &[f64]) -> f64 {
    let scale = arrival.last().copied().unwrap_or(0.0).max(1.0);
    let eps = 1e-12 * scale;
    let mut worst: f64 = 0.0;
    let mut ptr = 0;
    // only breakpoints where a curve first reaches a level are meaningful
    for (j, &y) in arrival.iter().enumerate() {
        if y <= eps || (j > 0 && y <= arrival[j - 1]) {
            continue;
        }
        match first_reach(times, departure, y - eps, &mut ptr) {
            Some(t) => worst = worst.max(t - times[j]),
            None => break,
        }
    }
    let mut ptr = 0;
    for (j, &x) in departure.iter().enumerate() {
        if x <= eps || (j > 0 && x <= departure[j - 1]) {
            continue;
        }
        if let Some(t) = first_reach(times, arrival, x - eps, &mut ptr) {
            worst = worst.max(times[j] - t);
        }
    }
    worst
}

/// Simulates synchronized greedy sources and returns each stream's largest
/// observed delay in seconds.
pub fn fluid_worst_case_oracle(
    topology: &Topology,
    streams: &[StreamSpec],
    horizon: f64,
    dt: f64,
) -> Result<Vec<f64>, TopologyError> {
    let routes = identify_routes(topology, streams)?;
    let steps = (horizon / dt).ceil() as usize;
    // duplicated t = 0 sample carries the instantaneous burst
    let mut times = Vec::with_capacity(steps + 2);
    times.push(0.0);
    for j in 0..=steps {
        times.push(j as f64 * dt);
    }

    // per stream: ordered list of servers crossed
    let paths: Vec<Vec<ServerKey>> = routes
        .iter()
        .map(|r| {
            let mut p = vec![ServerKey::Egress(r.nodes[0])];
            for c in &r.components {
                match c.kind {
                    ComponentKind::Multiplexer => p.push(ServerKey::Mux(c.egress)),
                    ComponentKind::Queue if c.in_capacity != c.out_capacity => {
                        p.push(ServerKey::Queue(c.egress))
                    }
                    _ => {}
                }
            }
            p
        })
        .collect();

    let mut members: BTreeMap<ServerKey, Vec<(usize, usize)>> = BTreeMap::new();
    for (s, p) in paths.iter().enumerate() {
        for (stage, key) in p.iter().enumerate() {
            members.entry(*key).or_default().push((s, stage));
        }
    }

    // curves[s][stage] is the departure curve of stream s from its stage-th server
    let mut curves: Vec<Vec<Option<Curve>>> = paths.iter().map(|p| vec![None; p.len()]).collect();
    let sources: Vec<Curve> = streams
        .iter()
        .map(|s| {
            let mut c = Vec::with_capacity(times.len());
            c.push(0.0);
            c.extend(times[1..].iter().map(|&t| s.envelope.eval(t)));
            c
        })
        .collect();

    let mut remaining: Vec<ServerKey> = members.keys().copied().collect();
    while !remaining.is_empty() {
        let before = remaining.len();
        remaining.retain(|key| {
            let mem = &members[key];
            let ready = mem
                .iter()
                .all(|&(s, stage)| stage == 0 || curves[s][stage - 1].is_some());
            if !ready {
                return true;
            }
            let capacity = match *key {
                ServerKey::Egress(station) => topology.capacity(station, topology.neighbors(station)[0]),
                ServerKey::Mux(port) => topology.mux_rate(port),
                ServerKey::Queue(port) => topology.capacity(port.from, port.to),
            }
            .unwrap();
            let inputs: Vec<&Curve> = mem
                .iter()
                .map(|&(s, stage)| match stage {
                    0 => &sources[s],
                    _ => curves[s][stage - 1].as_ref().unwrap(),
                })
                .collect();
            let outputs = serve(&times, capacity, &inputs);
            for (&(s, stage), out) in mem.iter().zip(outputs) {
                curves[s][stage] = Some(out);
            }
            false
        });
        // a tree's directed links form a DAG, so progress is guaranteed
        assert!(remaining.len() < before, "cyclic server dependency");
    }

    Ok(curves
        .iter()
        .map(|c| {
            if c.len() < 2 {
                return 0.0;
            }
            let arrival = c[0].as_ref().unwrap();
            let departure = c[c.len() - 1].as_ref().unwrap();
            horizontal_deviation(&times, arrival, departure)
        })
        .collect())
}
