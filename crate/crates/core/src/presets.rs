//! Ready-made networks.

use crate::netcalc::ArrivalEnvelope;
use crate::topology::{StreamSpec, Topology};

/// 10 Mb/s expressed in bytes/second.
pub const TEN_MBPS: f64 = 1.25e6;

/// One full-duplex switch connecting a process, its controller and two
/// stations generating background traffic towards both of them.
///
/// Streams, in order: `sensor` (process -> controller), `actuator`
/// (controller -> process), then four background streams of maximal
/// Ethernet frames.
pub fn single_switch_control_network(capacity: f64) -> (Topology, Vec<StreamSpec>) {
    let mut b = Topology::builder();
    let process = b.station("process");
    let controller = b.station("controller");
    let st1 = b.station("station1");
    let st2 = b.station("station2");
    let sw = b.switch("switch");
    for n in [process, controller, st1, st2] {
        b.link(n, sw, capacity);
    }
    let topology = b.build().expect("static topology is a tree");
    let control = ArrivalEnvelope::new(72.0, 7200.0).unwrap();
    let background = ArrivalEnvelope::new(1526.0, 305200.0).unwrap();
    let streams = vec![
        StreamSpec::new("sensor", process, controller, control, 72.0),
        StreamSpec::new("actuator", controller, process, control, 72.0),
        StreamSpec::new("bg1-process", st1, process, background, 1526.0),
        StreamSpec::new("bg1-controller", st1, controller, background, 1526.0),
        StreamSpec::new("bg2-process", st2, process, background, 1526.0),
        StreamSpec::new("bg2-controller", st2, controller, background, 1526.0),
    ];
    (topology, streams)
}
