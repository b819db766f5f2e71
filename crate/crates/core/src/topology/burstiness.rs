//! Burstiness equation system and its solution.
//!
//! Unknowns are the bursts `sigma_i^h` of stream `i` after its `h`-th
//! delay-bearing component (`h = 0` is the source burst and is fixed). Each
//! equation reads `sigma_i^{h+1} = sigma_i^h + rho_i * D(c)` where `D(c)` is the
//! delay bound of component `c`, itself a function of the bursts of every
//! stream sharing that component. The minimum over candidate backlogs makes
//! the system piecewise linear, so it is solved by monotone fixed-point
//! iteration from the source bursts. On the piece selected at the fixed point
//! the system is linear and [`BurstinessSystem::linear_system`] exposes it as
//! `A x = b`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::{NodeId, Port, Route, StreamSpec, Topology, TopologyError};
use crate::netcalc::{
    mux_candidate_affine, mux_delay_bound, mux_min_candidate, queue_delay_bound,
    ArrivalEnvelope, ComponentDelay, ComponentKind, MuxInput,
};

/// A stream's burst variable entering a component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Member {
    pub stream: usize,
    pub var_in: usize,
}

/// Streams entering a multiplexer through the same input port; they share
/// the input link and form one aggregated multiplexer input.
#[derive(Debug, Clone, PartialEq)]
pub struct MuxGroup {
    pub ingress_from: NodeId,
    pub capacity: f64,
    pub max_frame_len: f64,
    pub members: Vec<Member>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MuxNode {
    pub port: Port,
    pub label: String,
    pub out_rate: f64,
    pub groups: Vec<MuxGroup>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueueNode {
    pub port: Port,
    pub label: String,
    pub in_rate: f64,
    pub out_rate: f64,
    pub members: Vec<Member>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentRef {
    Mux { node: usize, group: usize },
    Queue { node: usize },
}

/// `sigma[var_out] = sigma[var_in] + rho(stream) * delay(component)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equation {
    pub stream: usize,
    pub component: ComponentRef,
    /// Position of the component in the stream's route.
    pub route_index: usize,
    pub var_in: usize,
    pub var_out: usize,
}

#[derive(Debug, Clone, PartialEq)]
struct StreamVars {
    name: String,
    first_var: usize,
    len: usize,
    sigma0: f64,
    rho: f64,
    route_len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BurstinessSystem {
    streams: Vec<StreamVars>,
    n_vars: usize,
    muxes: Vec<MuxNode>,
    queues: Vec<QueueNode>,
    equations: Vec<Equation>,
}

/// Builds one equation per stream per delay-bearing component on its route.
pub fn assemble_burstiness_system(
    topology: &Topology,
    streams: &[StreamSpec],
    routes: &[Route],
) -> BurstinessSystem {
    let mut vars = Vec::with_capacity(streams.len());
    let mut n_vars = 0;
    for (s, r) in streams.iter().zip(routes) {
        let len = 1 + r.delay_components().count();
        vars.push(StreamVars {
            name: s.name.clone(),
            first_var: n_vars,
            len,
            sigma0: s.envelope.sigma(),
            rho: s.envelope.rho(),
            route_len: r.components.len(),
        });
        n_vars += len;
    }

    // port -> (ingress -> members), kept ordered for deterministic summation
    let mut mux_members: BTreeMap<Port, BTreeMap<NodeId, Vec<Member>>> = BTreeMap::new();
    let mut queue_members: BTreeMap<Port, Vec<Member>> = BTreeMap::new();
    let mut pending = Vec::new();
    for r in routes {
        let sv = &vars[r.stream];
        let mut h = 0;
        for (pos, c) in r.components.iter().enumerate() {
            let member = Member {
                stream: r.stream,
                var_in: sv.first_var + h,
            };
            match c.kind {
                ComponentKind::Demultiplexer => continue,
                ComponentKind::Multiplexer => mux_members
                    .entry(c.egress)
                    .or_default()
                    .entry(c.ingress_from)
                    .or_default()
                    .push(member),
                ComponentKind::Queue => queue_members.entry(c.egress).or_default().push(member),
            }
            pending.push((r.stream, pos, c.kind, c.egress, c.ingress_from, member.var_in));
            h += 1;
        }
    }

    let mut mux_index = BTreeMap::new();
    let mut muxes = Vec::with_capacity(mux_members.len());
    for (port, groups) in mux_members {
        let groups: Vec<MuxGroup> = groups
            .into_iter()
            .map(|(ingress, members)| MuxGroup {
                ingress_from: ingress,
                capacity: topology.capacity(ingress, port.from).unwrap(),
                max_frame_len: members
                    .iter()
                    .map(|m| streams[m.stream].max_frame_len)
                    .fold(0.0, f64::max),
                members,
            })
            .collect();
        mux_index.insert(port, muxes.len());
        muxes.push(MuxNode {
            port,
            label: topology.port_label(port),
            out_rate: topology.mux_rate(port).unwrap(),
            groups,
        });
    }
    let mut queue_index = BTreeMap::new();
    let mut queues = Vec::with_capacity(queue_members.len());
    for (port, members) in queue_members {
        queue_index.insert(port, queues.len());
        queues.push(QueueNode {
            port,
            label: topology.port_label(port),
            in_rate: topology.mux_rate(port).unwrap(),
            out_rate: topology.capacity(port.from, port.to).unwrap(),
            members,
        });
    }

    let equations = pending
        .into_iter()
        .map(|(stream, pos, kind, port, ingress, var_in)| {
            let component = match kind {
                ComponentKind::Multiplexer => {
                    let node = mux_index[&port];
                    let group = muxes[node]
                        .groups
                        .iter()
                        .position(|g| g.ingress_from == ingress)
                        .unwrap();
                    ComponentRef::Mux { node, group }
                }
                _ => ComponentRef::Queue {
                    node: queue_index[&port],
                },
            };
            Equation {
                stream,
                component,
                route_index: pos,
                var_in,
                var_out: var_in + 1,
            }
        })
        .collect();

    BurstinessSystem {
        streams: vars,
        n_vars,
        muxes,
        queues,
        equations,
    }
}

/// Per-component delays for one evaluation of the system.
#[derive(Debug, Clone)]
struct ComponentDelays {
    mux: Vec<Vec<f64>>,
    queue: Vec<f64>,
}

impl BurstinessSystem {
    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn equations(&self) -> &[Equation] {
        &self.equations
    }

    pub fn muxes(&self) -> &[MuxNode] {
        &self.muxes
    }

    pub fn queues(&self) -> &[QueueNode] {
        &self.queues
    }

    /// Variable index of `sigma_stream^h`.
    pub fn var(&self, stream: usize, h: usize) -> usize {
        assert!(h < self.streams[stream].len);
        self.streams[stream].first_var + h
    }

    /// Number of burst variables of a stream, including the source burst.
    pub fn stream_len(&self, stream: usize) -> usize {
        self.streams[stream].len
    }

    /// Starting point of the iteration: every burst at its source value.
    pub fn initial_sigma(&self) -> Vec<f64> {
        let mut sigma = vec![0.0; self.n_vars];
        for s in &self.streams {
            sigma[s.first_var..s.first_var + s.len].fill(s.sigma0);
        }
        sigma
    }

    fn is_fixed(&self, var: usize) -> bool {
        self.streams.iter().any(|s| s.first_var == var)
    }

    /// Rejects any port whose sustained load reaches its capacity.
    pub fn check_load(&self) -> Result<(), TopologyError> {
        let overloaded = |label: &str, load: f64, capacity: f64| TopologyError::Overloaded {
            port: label.to_string(),
            load,
            capacity,
        };
        for m in &self.muxes {
            let mut total = 0.0;
            for g in &m.groups {
                let load: f64 = g.members.iter().map(|x| self.streams[x.stream].rho).sum();
                if load >= g.capacity {
                    return Err(overloaded(&m.label, load, g.capacity));
                }
                total += load;
            }
            if total >= m.out_rate {
                return Err(overloaded(&m.label, total, m.out_rate));
            }
        }
        for q in &self.queues {
            let load: f64 = q.members.iter().map(|x| self.streams[x.stream].rho).sum();
            if load >= q.out_rate {
                return Err(overloaded(&q.label, load, q.out_rate));
            }
        }
        Ok(())
    }

    fn mux_inputs(&self, node: &MuxNode, sigma: &[f64]) -> Result<Vec<MuxInput>, TopologyError> {
        node.groups
            .iter()
            .map(|g| {
                let (s, r) = g.members.iter().fold((0.0, 0.0), |(s, r), m| {
                    (s + sigma[m.var_in], r + self.streams[m.stream].rho)
                });
                Ok(MuxInput::new(
                    ArrivalEnvelope::new(s, r)?,
                    g.max_frame_len,
                    g.capacity,
                )?)
            })
            .collect()
    }

    fn queue_envelope(&self, node: &QueueNode, sigma: &[f64]) -> Result<ArrivalEnvelope, TopologyError> {
        let (s, r) = node.members.iter().fold((0.0, 0.0), |(s, r), m| {
            (s + sigma[m.var_in], r + self.streams[m.stream].rho)
        });
        Ok(ArrivalEnvelope::new(s, r)?)
    }

    fn component_delays(&self, sigma: &[f64]) -> Result<ComponentDelays, TopologyError> {
        let mut mux = Vec::with_capacity(self.muxes.len());
        for m in &self.muxes {
            let inputs = self.mux_inputs(m, sigma)?;
            let delays = (0..inputs.len())
                .map(|g| Ok(mux_delay_bound(&inputs, g, m.out_rate)?.value()))
                .collect::<Result<Vec<_>, TopologyError>>()?;
            mux.push(delays);
        }
        let queue = self
            .queues
            .iter()
            .map(|q| {
                let env = self.queue_envelope(q, sigma)?;
                Ok(queue_delay_bound(&env, q.in_rate, q.out_rate)?.value())
            })
            .collect::<Result<Vec<_>, TopologyError>>()?;
        Ok(ComponentDelays { mux, queue })
    }

    fn delay_of(&self, delays: &ComponentDelays, c: ComponentRef) -> f64 {
        match c {
            ComponentRef::Mux { node, group } => delays.mux[node][group],
            ComponentRef::Queue { node } => delays.queue[node],
        }
    }

    /// One application of the propagation map.
    pub fn iterate(&self, sigma: &[f64]) -> Result<Vec<f64>, TopologyError> {
        let delays = self.component_delays(sigma)?;
        let mut next = sigma.to_vec();
        for eq in &self.equations {
            let rho = self.streams[eq.stream].rho;
            next[eq.var_out] = sigma[eq.var_in] + rho * self.delay_of(&delays, eq.component);
        }
        Ok(next)
    }

    /// Linear system `A x = b` of the piece active at `sigma`. Unknowns are
    /// all non-source bursts, ordered by variable index.
    pub fn linear_system(
        &self,
        sigma: &[f64],
    ) -> Result<(Vec<usize>, DMatrix<f64>, DVector<f64>), TopologyError> {
        let unknowns: Vec<usize> = (0..self.n_vars).filter(|&v| !self.is_fixed(v)).collect();
        let col_of = |v: usize| unknowns.binary_search(&v).ok();
        let n = unknowns.len();
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut b = DVector::<f64>::zeros(n);

        for (row, eq) in self.equations.iter().enumerate() {
            let rho = self.streams[eq.stream].rho;
            // x_out - x_in - rho * sum(coeff * x_member) = rho * constant
            a[(row, col_of(eq.var_out).unwrap())] += 1.0;
            let mut add = |var: usize, coeff: f64, b: &mut DVector<f64>| match col_of(var) {
                Some(c) => a[(row, c)] -= coeff,
                None => b[row] += coeff * sigma[var],
            };
            add(eq.var_in, 1.0, &mut b);
            match eq.component {
                ComponentRef::Mux { node, group } => {
                    let m = &self.muxes[node];
                    let inputs = self.mux_inputs(m, sigma)?;
                    let (k, backlog) = mux_min_candidate(&inputs, group, m.out_rate)?;
                    if backlog > 0.0 {
                        let aff = mux_candidate_affine(&inputs, group, k, m.out_rate)?;
                        b[row] += rho * aff.constant / m.out_rate;
                        for (g, coeff) in m.groups.iter().zip(&aff.sigma_coeffs) {
                            for mem in &g.members {
                                add(mem.var_in, rho * coeff / m.out_rate, &mut b);
                            }
                        }
                    }
                }
                ComponentRef::Queue { node } => {
                    let q = &self.queues[node];
                    if q.in_rate > q.out_rate {
                        let env = self.queue_envelope(q, sigma)?;
                        let factor =
                            (q.in_rate - q.out_rate) / (q.in_rate - env.rho()) / q.out_rate;
                        for mem in &q.members {
                            add(mem.var_in, rho * factor, &mut b);
                        }
                    }
                }
            }
        }
        Ok((unknowns, a, b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub max_iterations: usize,
    /// Convergence threshold on the largest per-variable change, bytes.
    pub tolerance: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iterations: 1000,
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BurstinessSolution {
    names: Vec<String>,
    /// `sigma[i][h]`, bytes.
    sigma: Vec<Vec<f64>>,
    rho: Vec<f64>,
    /// Delay of every route component of every stream, demultiplexers included.
    delays: Vec<Vec<ComponentDelay>>,
    pub iterations: usize,
    pub residual: f64,
}

impl BurstinessSolution {
    pub fn sigma(&self, stream: usize) -> &[f64] {
        &self.sigma[stream]
    }

    pub fn component_delays(&self, stream: usize) -> &[ComponentDelay] {
        &self.delays[stream]
    }

    /// Sum of the resolved component bounds along the stream's route.
    pub fn path_delay(&self, stream: usize) -> f64 {
        self.delays[stream].iter().map(|d| d.value()).sum()
    }

    pub fn stream_count(&self) -> usize {
        self.sigma.len()
    }

    pub fn stream_name(&self, stream: usize) -> &str {
        &self.names[stream]
    }
}

/// Solves the burstiness system by fixed-point iteration from the source
/// bursts. The iteration is monotone: bursts never decrease between sweeps.
pub fn solve_burstiness(
    system: &BurstinessSystem,
    options: SolveOptions,
) -> Result<BurstinessSolution, TopologyError> {
    system.check_load()?;
    let mut sigma = system.initial_sigma();
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    while iterations < options.max_iterations {
        let next = system.iterate(&sigma)?;
        iterations += 1;
        residual = next
            .iter()
            .zip(&sigma)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        sigma = next;
        if residual < options.tolerance {
            break;
        }
    }
    if !(residual < options.tolerance) {
        return Err(TopologyError::NotConverged {
            iterations,
            residual,
        });
    }

    let delays = system.component_delays(&sigma)?;
    let mut per_stream: Vec<Vec<ComponentDelay>> = system
        .streams
        .iter()
        .map(|s| vec![ComponentDelay::new(ComponentKind::Demultiplexer, 0.0); s.route_len])
        .collect();
    for eq in &system.equations {
        let kind = match eq.component {
            ComponentRef::Mux { .. } => ComponentKind::Multiplexer,
            ComponentRef::Queue { .. } => ComponentKind::Queue,
        };
        per_stream[eq.stream][eq.route_index] =
            ComponentDelay::new(kind, system.delay_of(&delays, eq.component));
    }
    Ok(BurstinessSolution {
        names: system.streams.iter().map(|s| s.name.clone()).collect(),
        sigma: system
            .streams
            .iter()
            .map(|s| sigma[s.first_var..s.first_var + s.len].to_vec())
            .collect(),
        rho: system.streams.iter().map(|s| s.rho).collect(),
        delays: per_stream,
        iterations,
        residual,
    })
}

/// End-to-end bound of a stream: burst growth over its route divided by its
/// rate.
pub fn end_to_end_delay(stream: usize, solution: &BurstinessSolution) -> Result<f64, TopologyError> {
    let sigma = &solution.sigma[stream];
    if sigma.len() == 1 {
        return Ok(0.0);
    }
    let rho = solution.rho[stream];
    if rho == 0.0 {
        return Err(TopologyError::ZeroRate(solution.names[stream].clone()));
    }
    Ok((sigma[sigma.len() - 1] - sigma[0]) / rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::identify_routes;

    fn env(s: f64, r: f64) -> ArrivalEnvelope {
        ArrivalEnvelope::new(s, r).unwrap()
    }

    #[test]
    fn lone_stream_keeps_its_burst() {
        let mut b = Topology::builder();
        let a = b.station("a");
        let c = b.station("c");
        let s1 = b.switch("s1");
        let s2 = b.switch("s2");
        b.link(a, s1, 1e6).link(s1, s2, 1e6).link(s2, c, 1e6);
        let t = b.build().unwrap();
        let streams = [StreamSpec::new("x", a, c, env(500.0, 1e4), 500.0)];
        let routes = identify_routes(&t, &streams).unwrap();
        let sys = assemble_burstiness_system(&t, &streams, &routes);
        assert_eq!(sys.stream_len(0), 5);
        let sol = solve_burstiness(&sys, SolveOptions::default()).unwrap();
        assert_eq!(sol.iterations, 1);
        assert!(sol.sigma(0).iter().all(|&s| s == 500.0));
        assert_eq!(end_to_end_delay(0, &sol).unwrap(), 0.0);
    }

    #[test]
    fn shared_mux_couples_streams() {
        let mut b = Topology::builder();
        let a = b.station("a");
        let c = b.station("c");
        let d = b.station("d");
        let s = b.switch("s");
        b.link(a, s, 1.25e5).link(c, s, 1.25e5).link(s, d, 1.25e5);
        let t = b.build().unwrap();
        let streams = [
            StreamSpec::new("x", a, d, env(1000.0, 1e4), 100.0),
            StreamSpec::new("y", c, d, env(400.0, 2e4), 100.0),
        ];
        let routes = identify_routes(&t, &streams).unwrap();
        let sys = assemble_burstiness_system(&t, &streams, &routes);
        assert_eq!(sys.muxes().len(), 1);
        assert_eq!(sys.muxes()[0].groups.len(), 2);
        let sol = solve_burstiness(&sys, SolveOptions::default()).unwrap();

        // hand expansion for x with C_in = C_out: candidates for k = x and k = y
        let cap = 1.25e5;
        let ux = 1000.0 / (cap - 1e4);
        let own: f64 = 400.0 + 2e4 * (ux + 100.0 / cap);
        let uy = 400.0 / (cap - 2e4) - 100.0 / cap;
        let other = 1000.0 + 1e4 * (uy + 100.0 / cap) - 1e4 * 100.0 / cap + 100.0;
        let dx = own.min(other) / cap;
        assert!((sol.sigma(0)[1] - (1000.0 + 1e4 * dx)).abs() < 1e-9);
        assert!((end_to_end_delay(0, &sol).unwrap() - dx).abs() < 1e-15);
    }

    #[test]
    fn overload_is_reported() {
        let mut b = Topology::builder();
        let a = b.station("a");
        let c = b.station("c");
        let d = b.station("d");
        let s = b.switch("s");
        b.link(a, s, 1e5).link(c, s, 1e5).link(s, d, 1e5);
        let t = b.build().unwrap();
        let streams = [
            StreamSpec::new("x", a, d, env(10.0, 6e4), 100.0),
            StreamSpec::new("y", c, d, env(10.0, 5e4), 100.0),
        ];
        let routes = identify_routes(&t, &streams).unwrap();
        let sys = assemble_burstiness_system(&t, &streams, &routes);
        match solve_burstiness(&sys, SolveOptions::default()) {
            Err(TopologyError::Overloaded { port, .. }) => assert_eq!(port, "s->d"),
            other => panic!("expected overload, got {other:?}"),
        }
    }

    #[test]
    fn zero_rate_stream() {
        let mut b = Topology::builder();
        let a = b.station("a");
        let c = b.station("c");
        let s = b.switch("s");
        b.link(a, s, 1e5).link(s, c, 1e5);
        let t = b.build().unwrap();
        let streams = [StreamSpec::new("x", a, c, env(10.0, 0.0), 100.0)];
        let routes = identify_routes(&t, &streams).unwrap();
        let sys = assemble_burstiness_system(&t, &streams, &routes);
        let sol = solve_burstiness(&sys, SolveOptions::default()).unwrap();
        assert!(matches!(end_to_end_delay(0, &sol), Err(TopologyError::ZeroRate(_))));
    }
}
