//! Single-input block diagrams: frequency responses and fixed-step RK4
//! simulation with transport delays.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{LtiError, RationalTF};

/// Handle to a node's output signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Signal(usize);

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Input,
    Block { tf: RationalTF, input: Option<Signal> },
    Sum { terms: Vec<(f64, Signal)> },
    Delay { input: Signal, path: usize },
}

/// Nodes are evaluated in insertion order. A node may only read signals
/// created before it, except that strictly proper blocks (whose output
/// depends on state alone) may read, and be read by, any node; that is how
/// feedback loops close.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagram {
    nodes: Vec<Node>,
    labels: Vec<String>,
}

impl Default for Diagram {
    fn default() -> Self {
        Self::new()
    }
}

impl Diagram {
    /// A diagram whose only external input is the setpoint.
    pub fn new() -> Self {
        Self {
            nodes: vec![Node::Input],
            labels: vec!["setpoint".into()],
        }
    }

    pub fn input(&self) -> Signal {
        Signal(0)
    }

    fn push(&mut self, label: &str, node: Node) -> Signal {
        self.nodes.push(node);
        self.labels.push(label.to_string());
        Signal(self.nodes.len() - 1)
    }

    /// Adds a block whose input is wired later with [`Diagram::connect`].
    pub fn block(&mut self, label: &str, tf: RationalTF) -> Signal {
        self.push(label, Node::Block { tf, input: None })
    }

    pub fn block_from(&mut self, label: &str, tf: RationalTF, input: Signal) -> Signal {
        self.push(label, Node::Block { tf, input: Some(input) })
    }

    pub fn connect(&mut self, block: Signal, input: Signal) -> Result<(), LtiError> {
        match self.nodes.get_mut(block.0) {
            Some(Node::Block { input: slot, .. }) => {
                *slot = Some(input);
                Ok(())
            }
            _ => Err(LtiError::InvalidDiagram(format!("node {} is not a block", block.0))),
        }
    }

    pub fn sum(&mut self, label: &str, terms: &[(f64, Signal)]) -> Signal {
        self.push(label, Node::Sum { terms: terms.to_vec() })
    }

    /// Transport delay on numbered path `path`; its length is supplied at
    /// simulation time.
    pub fn delay(&mut self, label: &str, input: Signal, path: usize) -> Signal {
        self.push(label, Node::Delay { input, path })
    }

    pub fn find(&self, label: &str) -> Option<Signal> {
        self.labels.iter().position(|l| l == label).map(Signal)
    }

    pub fn label(&self, s: Signal) -> &str {
        &self.labels[s.0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn inputs_of(node: &Node) -> Vec<Signal> {
        match node {
            Node::Input => vec![],
            Node::Block { input, .. } => input.iter().copied().collect(),
            Node::Sum { terms } => terms.iter().map(|t| t.1).collect(),
            Node::Delay { input, .. } => vec![*input],
        }
    }

    fn is_state_output(&self, s: Signal) -> bool {
        matches!(&self.nodes[s.0], Node::Block { tf, .. } if tf.is_strictly_proper())
    }

    fn validate(&self) -> Result<(), LtiError> {
        for (n, node) in self.nodes.iter().enumerate() {
            if let Node::Block { tf, input } = node {
                if input.is_none() {
                    return Err(LtiError::InvalidDiagram(format!("block `{}` has no input", self.labels[n])));
                }
                if !tf.is_proper() {
                    return Err(LtiError::ImproperBlock(self.labels[n].clone()));
                }
            }
            for s in Self::inputs_of(node) {
                if s.0 >= self.nodes.len() {
                    return Err(LtiError::InvalidDiagram(format!("dangling signal {}", s.0)));
                }
                // a strictly proper block only needs its input for the
                // derivative, after every output is known
                if s.0 >= n && !self.is_state_output(s) && !self.is_state_output(Signal(n)) {
                    return Err(LtiError::InvalidDiagram(format!(
                        "`{}` reads `{}` before it is evaluated",
                        self.labels[n], self.labels[s.0]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Response at `j*omega` from the setpoint to `probe`; `delay(path, omega)`
    /// gives each transport delay's response.
    pub fn frequency_response(
        &self,
        omega: f64,
        delay: &dyn Fn(usize, f64) -> Complex64,
        probe: Signal,
    ) -> Result<Complex64, LtiError> {
        self.validate()?;
        let n = self.nodes.len();
        let one = Complex64::new(1.0, 0.0);
        let mut m = DMatrix::<Complex64>::identity(n, n);
        let mut rhs = DVector::<Complex64>::zeros(n);
        for (row, node) in self.nodes.iter().enumerate() {
            match node {
                Node::Input => rhs[row] = one,
                Node::Block { tf, input } => {
                    m[(row, input.unwrap().0)] -= tf.freq_response(omega)?;
                }
                Node::Sum { terms } => {
                    for &(k, s) in terms {
                        m[(row, s.0)] -= Complex64::new(k, 0.0);
                    }
                }
                Node::Delay { input, path } => m[(row, input.0)] -= delay(*path, omega),
            }
        }
        let v = m
            .lu()
            .solve(&rhs)
            .ok_or(LtiError::PoleOnGrid { omega })?;
        Ok(v[probe.0])
    }
}

/// Controllable canonical realization of a proper transfer function.
#[derive(Debug, Clone)]
struct Realization {
    /// Monic denominator coefficients `a_1..a_n`.
    a: Vec<f64>,
    c: Vec<f64>,
    d: f64,
}

impl Realization {
    fn new(tf: &RationalTF) -> Self {
        let den = tf.den();
        let n = den.len() - 1;
        let lead = den[0];
        let a: Vec<f64> = den[1..].iter().map(|x| x / lead).collect();
        let mut b = vec![0.0; n + 1 - tf.num().len().min(n + 1)];
        b.extend(tf.num().iter().map(|x| x / lead));
        let d = b[0];
        // state x_1 is the lowest derivative: c_i multiplies s^(i-1)
        let c = (0..n).map(|i| b[n - i] - a[n - 1 - i] * d).collect();
        Self { a, c, d }
    }

    fn order(&self) -> usize {
        self.a.len()
    }

    fn output(&self, x: &[f64], u: f64) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum::<f64>() + self.d * u
    }

    fn derivative(&self, x: &[f64], u: f64, dx: &mut [f64]) {
        let n = self.order();
        if n == 0 {
            return;
        }
        dx[..n - 1].copy_from_slice(&x[1..]);
        let feedback: f64 = (0..n).map(|i| self.a[n - 1 - i] * x[i]).sum();
        dx[n - 1] = u - feedback;
    }
}

/// Past samples of a delayed signal on the uniform time grid.
#[derive(Debug, Clone)]
struct DelayLine {
    samples: VecDeque<f64>,
    capacity: usize,
}

impl DelayLine {
    fn new(capacity: usize) -> Self {
        Self {
            samples: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    fn push(&mut self, v: f64) {
        if self.samples.len() == self.capacity {
            self.samples.pop_front();
        }
        self.samples.push_back(v);
    }

    /// Value at `target`, given that the newest stored sample is at `t_last`
    /// and the input is currently `current` at `t_now`. Before `t = 0` the
    /// signal is at rest.
    fn read(&self, dt: f64, t_last: f64, t_now: f64, current: f64, target: f64) -> f64 {
        let Some(&newest) = self.samples.back() else {
            return if target >= t_now { current } else { 0.0 };
        };
        if target >= t_last {
            if t_now <= t_last {
                return newest;
            }
            return newest + (target - t_last) / (t_now - t_last) * (current - newest);
        }
        if target < 0.0 {
            return 0.0;
        }
        let back = (t_last - target) / dt;
        let k = back.floor() as usize;
        let frac = back - k as f64;
        let len = self.samples.len();
        let at = |j: usize| if j < len { self.samples[len - 1 - j] } else { 0.0 };
        at(k) + frac * (at(k + 1) - at(k))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub dt: f64,
    pub horizon: f64,
    /// Longest transport delay the buffers must hold.
    pub max_delay: f64,
}

/// Probed signals sampled at `t_n = n * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub time: Vec<f64>,
    pub signals: Vec<Vec<f64>>,
}

struct Engine<'a> {
    diagram: &'a Diagram,
    real: Vec<Option<Realization>>,
    offset: Vec<usize>,
    lines: Vec<Option<DelayLine>>,
    dt: f64,
}

impl Engine<'_> {
    /// Evaluates every node at `t_now` for state `x`; delays read with lag
    /// `tau(path)`, newest stored sample at `t_last`.
    fn outputs(
        &self,
        x: &[f64],
        r: f64,
        t_last: f64,
        t_now: f64,
        tau: &[f64],
        out: &mut [f64],
    ) {
        let nodes = &self.diagram.nodes;
        for (n, node) in nodes.iter().enumerate() {
            if let (Node::Block { tf, .. }, Some(re)) = (node, &self.real[n]) {
                if tf.is_strictly_proper() {
                    out[n] = re.output(&x[self.offset[n]..self.offset[n] + re.order()], 0.0);
                }
            }
        }
        for (n, node) in nodes.iter().enumerate() {
            out[n] = match node {
                Node::Input => r,
                Node::Block { tf, input } => {
                    if tf.is_strictly_proper() {
                        continue;
                    }
                    let re = self.real[n].as_ref().unwrap();
                    re.output(&x[self.offset[n]..self.offset[n] + re.order()], out[input.unwrap().0])
                }
                Node::Sum { terms } => terms.iter().map(|&(k, s)| k * out[s.0]).sum(),
                Node::Delay { input, path } => self.lines[n].as_ref().unwrap().read(
                    self.dt,
                    t_last,
                    t_now,
                    out[input.0],
                    t_now - tau[*path],
                ),
            };
        }
    }

    fn derivative(&self, x: &[f64], out: &[f64], dx: &mut [f64]) {
        for (n, node) in self.diagram.nodes.iter().enumerate() {
            if let (Node::Block { input, .. }, Some(re)) = (node, &self.real[n]) {
                let o = self.offset[n];
                re.derivative(&x[o..o + re.order()], out[input.unwrap().0], &mut dx[o..o + re.order()]);
            }
        }
    }
}

/// Fixed-step RK4 integration of the diagram's state-space realization.
///
/// `delays(path, t)` gives each transport delay at time `t`; it is sampled at
/// the start of every step and held over the step.
pub fn simulate_lti(
    diagram: &Diagram,
    setpoint: &dyn Fn(f64) -> f64,
    delays: &dyn Fn(usize, f64) -> f64,
    probes: &[Signal],
    options: SimOptions,
) -> Result<SimTrace, LtiError> {
    diagram.validate()?;
    let SimOptions { dt, horizon, max_delay } = options;
    if !(dt > 0.0 && horizon >= 0.0 && max_delay >= 0.0) {
        return Err(LtiError::InvalidParameter("need dt > 0, horizon >= 0, max_delay >= 0"));
    }
    let mut fastest: f64 = 0.0;
    let mut real = Vec::with_capacity(diagram.len());
    let mut offset = Vec::with_capacity(diagram.len());
    let mut lines = Vec::with_capacity(diagram.len());
    let mut n_state = 0;
    let mut n_paths = 0;
    for node in &diagram.nodes {
        offset.push(n_state);
        match node {
            Node::Block { tf, .. } => {
                let re = Realization::new(tf);
                n_state += re.order();
                fastest = tf.poles().iter().map(|p| p.norm()).fold(fastest, f64::max);
                real.push(Some(re));
                lines.push(None);
            }
            Node::Delay { path, .. } => {
                n_paths = n_paths.max(path + 1);
                real.push(None);
                lines.push(Some(DelayLine::new((max_delay / dt).ceil() as usize + 3)));
            }
            _ => {
                real.push(None);
                lines.push(None);
            }
        }
    }
    if fastest > 0.0 {
        let limit = 1.0 / fastest / 10.0;
        if dt > limit * (1.0 + 1e-9) {
            return Err(LtiError::StepTooLarge { dt, limit });
        }
    }
    let mut engine = Engine {
        diagram,
        real,
        offset,
        lines,
        dt,
    };

    let steps = (horizon / dt).round() as usize;
    let taus = |t: f64| -> Result<Vec<f64>, LtiError> {
        (0..n_paths)
            .map(|p| {
                let tau = delays(p, t);
                if !(0.0..=max_delay * (1.0 + 1e-12)).contains(&tau) {
                    return Err(LtiError::InvalidParameter("delay outside [0, max_delay]"));
                }
                Ok(tau)
            })
            .collect()
    };

    let nn = diagram.len();
    let mut x = vec![0.0; n_state];
    let mut out = vec![0.0; nn];
    let mut trace = SimTrace {
        time: Vec::with_capacity(steps + 1),
        signals: vec![Vec::with_capacity(steps + 1); probes.len()],
    };
    let record = |engine: &mut Engine, out: &[f64], t: f64, trace: &mut SimTrace| {
        for (n, node) in diagram.nodes.iter().enumerate() {
            if let Node::Delay { input, .. } = node {
                engine.lines[n].as_mut().unwrap().push(out[input.0]);
            }
        }
        trace.time.push(t);
        for (sig, p) in trace.signals.iter_mut().zip(probes) {
            sig.push(out[p.0]);
        }
    };

    let mut tau = taus(0.0)?;
    engine.outputs(&x, setpoint(0.0), f64::NEG_INFINITY, 0.0, &tau, &mut out);
    record(&mut engine, &out, 0.0, &mut trace);

    let (mut k1, mut k2, mut k3, mut k4) =
        (vec![0.0; n_state], vec![0.0; n_state], vec![0.0; n_state], vec![0.0; n_state]);
    let mut xs = vec![0.0; n_state];
    for step in 0..steps {
        let t = step as f64 * dt;
        let t_next = (step + 1) as f64 * dt;
        let mid = t + dt / 2.0;
        let r_mid = setpoint(mid);

        engine.outputs(&x, setpoint(t), t, t, &tau, &mut out);
        engine.derivative(&x, &out, &mut k1);
        for i in 0..n_state {
            xs[i] = x[i] + dt / 2.0 * k1[i];
        }
        engine.outputs(&xs, r_mid, t, mid, &tau, &mut out);
        engine.derivative(&xs, &out, &mut k2);
        for i in 0..n_state {
            xs[i] = x[i] + dt / 2.0 * k2[i];
        }
        engine.outputs(&xs, r_mid, t, mid, &tau, &mut out);
        engine.derivative(&xs, &out, &mut k3);
        for i in 0..n_state {
            xs[i] = x[i] + dt * k3[i];
        }
        engine.outputs(&xs, setpoint(t_next), t, t_next, &tau, &mut out);
        engine.derivative(&xs, &out, &mut k4);
        for i in 0..n_state {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }

        tau = taus(t_next)?;
        engine.outputs(&x, setpoint(t_next), t, t_next, &tau, &mut out);
        record(&mut engine, &out, t_next, &mut trace);
    }
    Ok(trace)
}
