//! Seeded random tree networks for property suites.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use ubdnet::netcalc::ArrivalEnvelope;
use ubdnet::topology::{identify_routes, Port, StreamSpec, Topology};

pub struct RandomNetwork {
    pub topology: Topology,
    pub streams: Vec<StreamSpec>,
}

/// Up to `max_switches` switches in a random tree, two or three stations per
/// switch, up to `max_streams` streams, every port loaded below `max_util`.
pub fn random_network(seed: u64, max_switches: usize, max_streams: usize, max_util: f64) -> RandomNetwork {
    random_network_with(seed, max_switches, max_streams, max_util, false)
}

/// With `fabric`, switches may forward internally at twenty times the link rate.
pub fn random_network_with(
    seed: u64,
    max_switches: usize,
    max_streams: usize,
    max_util: f64,
    fabric: bool,
) -> RandomNetwork {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let capacity = if rng.random_bool(0.5) { 1.25e6 } else { 1.25e7 };
    let n_sw = rng.random_range(1..=max_switches);
    let mut b = Topology::builder();
    let mut switches = Vec::new();
    for i in 0..n_sw {
        let fabric = if fabric && rng.random_bool(0.5) { Some(20.0 * capacity) } else { None };
        let s = b.switch_with_fabric(&format!("sw{i}"), fabric);
        if i > 0 {
            let parent = switches[rng.random_range(0..i)];
            b.link(parent, s, capacity);
        }
        switches.push(s);
    }
    let mut stations = Vec::new();
    for (i, &s) in switches.iter().enumerate() {
        for j in 0..rng.random_range(2..=3) {
            let st = b.station(&format!("st{i}_{j}"));
            b.link(st, s, capacity);
            stations.push(st);
        }
    }
    let topology = b.build().unwrap();
    let n_streams = rng.random_range(1..=max_streams);
    let mut streams = Vec::new();
    for k in 0..n_streams {
        let src = stations[rng.random_range(0..stations.len())];
        let mut dst = src;
        while dst == src {
            dst = stations[rng.random_range(0..stations.len())];
        }
        let frame = rng.random_range(64.0..=1526.0);
        let sigma = frame * rng.random_range(1.0..4.0);
        let rho = capacity * rng.random_range(0.01..0.3);
        streams.push(StreamSpec::new(
            &format!("f{k}"),
            src,
            dst,
            ArrivalEnvelope::new(sigma, rho).unwrap(),
            frame,
        ));
    }
    // scale rates so that every directed link stays below max_util
    let routes = identify_routes(&topology, &streams).unwrap();
    let mut load = std::collections::HashMap::<Port, f64>::new();
    for r in &routes {
        for w in r.nodes.windows(2) {
            *load.entry(Port { from: w[0], to: w[1] }).or_default() += streams[r.stream].envelope.rho();
        }
    }
    let worst = load.values().fold(0.0_f64, |a, &b| a.max(b)) / capacity;
    if worst >= max_util {
        let scale = max_util * 0.99 / worst;
        for s in &mut streams {
            s.envelope = ArrivalEnvelope::new(s.envelope.sigma(), s.envelope.rho() * scale).unwrap();
        }
    }
    RandomNetwork { topology, streams }
}
