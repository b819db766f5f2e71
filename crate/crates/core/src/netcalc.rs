//! Per-component worst-case delay bounds for leaky-bucket constrained traffic.
//!
//! A switch output port is decomposed into a FIFO multiplexer feeding a FIFO
//! queue; the input side is a demultiplexer. Each component gets an upper
//! bound on the delay of any bit crossing it, and a stream's envelope is
//! propagated through the component by adding `rho * delay` to its burst.
//!
//! Units throughout: data in bytes, rates and capacities in bytes/second,
//! delays in seconds.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetcalcError {
    #[error("non-positive headroom: capacity {capacity} B/s does not exceed rate {rate} B/s")]
    NonPositiveHeadroom { capacity: f64, rate: f64 },
    #[error("negative delay {0} s")]
    NegativeDelay(f64),
    #[error("invalid envelope (sigma={sigma}, rho={rho})")]
    InvalidEnvelope { sigma: f64, rho: f64 },
    #[error("invalid multiplexer input: {0}")]
    InvalidInput(&'static str),
    #[error("stream index {index} out of range for {len} inputs")]
    IndexOutOfRange { index: usize, len: usize },
}

/// Leaky-bucket arrival curve `b(t) = sigma + rho * t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalEnvelope {
    sigma: f64,
    rho: f64,
}

impl ArrivalEnvelope {
    pub fn new(sigma: f64, rho: f64) -> Result<Self, NetcalcError> {
        if !(sigma.is_finite() && rho.is_finite() && sigma >= 0.0 && rho >= 0.0) {
            return Err(NetcalcError::InvalidEnvelope { sigma, rho });
        }
        Ok(Self { sigma, rho })
    }

    /// Burst size in bytes.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Sustained rate in bytes/second.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Evaluates the envelope at `t >= 0`.
    pub fn eval(&self, t: f64) -> f64 {
        self.sigma + self.rho * t
    }

    /// Sum of two envelopes; the aggregate of two streams sharing a link.
    pub fn aggregate(&self, other: &ArrivalEnvelope) -> ArrivalEnvelope {
        ArrivalEnvelope {
            sigma: self.sigma + other.sigma,
            rho: self.rho + other.rho,
        }
    }
}

/// One input of a FIFO multiplexer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuxInput {
    pub envelope: ArrivalEnvelope,
    /// Maximum frame length `L` in bytes.
    pub max_frame_len: f64,
    /// Capacity `C` of the input link in bytes/second.
    pub in_capacity: f64,
}

impl MuxInput {
    pub fn new(
        envelope: ArrivalEnvelope,
        max_frame_len: f64,
        in_capacity: f64,
    ) -> Result<Self, NetcalcError> {
        if !(max_frame_len > 0.0 && max_frame_len.is_finite()) {
            return Err(NetcalcError::InvalidInput("max_frame_len must be > 0"));
        }
        if !(in_capacity > 0.0 && in_capacity.is_finite()) {
            return Err(NetcalcError::InvalidInput("in_capacity must be > 0"));
        }
        if envelope.rho() >= in_capacity {
            return Err(NetcalcError::NonPositiveHeadroom {
                capacity: in_capacity,
                rate: envelope.rho(),
            });
        }
        Ok(Self {
            envelope,
            max_frame_len,
            in_capacity,
        })
    }

    fn frame_time(&self) -> f64 {
        self.max_frame_len / self.in_capacity
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ComponentKind {
    Multiplexer,
    Queue,
    Demultiplexer,
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ComponentKind::Multiplexer => "mux",
            ComponentKind::Queue => "queue",
            ComponentKind::Demultiplexer => "demux",
        })
    }
}

/// A resolved delay bound for one component, in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentDelay {
    value: f64,
    kind: ComponentKind,
}

impl ComponentDelay {
    /// Builds a delay of the given kind. Negative values are clamped to zero
    /// and a demultiplexer is always zero.
    pub fn new(kind: ComponentKind, value: f64) -> Self {
        let value = match kind {
            ComponentKind::Demultiplexer => 0.0,
            _ => value.max(0.0),
        };
        Self { value, kind }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn kind(&self) -> ComponentKind {
        self.kind
    }
}

/// Whether a bursty period is computed for the tagged stream itself or for a
/// competing input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BurstRole {
    /// `u = sigma / (C - rho)`
    Own,
    /// `u = sigma / (C - rho) - L / C`, clamped at zero.
    Other,
}

/// Duration over which an input's burst keeps its arrival above its rate.
pub fn bursty_period(input: &MuxInput, role: BurstRole) -> Result<f64, NetcalcError> {
    let headroom = input.in_capacity - input.envelope.rho();
    if headroom <= 0.0 {
        return Err(NetcalcError::NonPositiveHeadroom {
            capacity: input.in_capacity,
            rate: input.envelope.rho(),
        });
    }
    let u = input.envelope.sigma() / headroom;
    Ok(match role {
        BurstRole::Own => u,
        BurstRole::Other => (u - input.frame_time()).max(0.0),
    })
}

/// Affine form `constant + sum_z coeff[z] * sigma_z` of a candidate backlog,
/// valid while the bursty-period clamp does not change state.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineBacklog {
    pub constant: f64,
    pub sigma_coeffs: Vec<f64>,
}

impl AffineBacklog {
    pub fn eval(&self, inputs: &[MuxInput]) -> f64 {
        self.constant
            + self
                .sigma_coeffs
                .iter()
                .zip(inputs)
                .map(|(c, inp)| c * inp.envelope.sigma())
                .sum::<f64>()
    }
}

fn check_indices(inputs: &[MuxInput], idx: &[usize]) -> Result<(), NetcalcError> {
    if inputs.is_empty() {
        return Err(NetcalcError::InvalidInput("multiplexer needs at least one input"));
    }
    for &i in idx {
        if i >= inputs.len() {
            return Err(NetcalcError::IndexOutOfRange {
                index: i,
                len: inputs.len(),
            });
        }
    }
    Ok(())
}

/// Backlog bound over the bursty period of input `k`, as seen by a bit of
/// input `i`.
///
/// For `k == i` the own bursty period is used and the shifted arrivals of all
/// other inputs are accumulated. For `k != i` the competing bursty period is
/// used, the tagged stream's first frame is credited back and a full frame of
/// `k` is charged.
pub fn mux_candidate_backlog(
    inputs: &[MuxInput],
    i: usize,
    k: usize,
    out_capacity: f64,
) -> Result<f64, NetcalcError> {
    check_indices(inputs, &[i, k])?;
    if !(out_capacity > 0.0) {
        return Err(NetcalcError::InvalidInput("out_capacity must be > 0"));
    }
    let role = if k == i { BurstRole::Own } else { BurstRole::Other };
    let u = bursty_period(&inputs[k], role)?;
    let mut backlog = 0.0;
    for (z, inp) in inputs.iter().enumerate() {
        if z == k {
            continue;
        }
        backlog += inp.envelope.sigma() + inp.envelope.rho() * (u + inp.frame_time());
    }
    backlog += u * (inputs[k].in_capacity - out_capacity);
    if k != i {
        backlog += inputs[k].max_frame_len - inputs[i].envelope.rho() * inputs[i].frame_time();
    }
    Ok(backlog)
}

/// Affine decomposition of [`mux_candidate_backlog`] in the input bursts.
pub fn mux_candidate_affine(
    inputs: &[MuxInput],
    i: usize,
    k: usize,
    out_capacity: f64,
) -> Result<AffineBacklog, NetcalcError> {
    check_indices(inputs, &[i, k])?;
    let role = if k == i { BurstRole::Own } else { BurstRole::Other };
    let u = bursty_period(&inputs[k], role)?;
    let headroom = inputs[k].in_capacity - inputs[k].envelope.rho();
    let mut coeffs = vec![0.0; inputs.len()];
    let mut constant = 0.0;
    let mut other_rates = 0.0;
    for (z, inp) in inputs.iter().enumerate() {
        if z == k {
            continue;
        }
        coeffs[z] = 1.0;
        other_rates += inp.envelope.rho();
        constant += inp.envelope.rho() * inp.frame_time();
    }
    // u = sigma_k / headroom - shift while unclamped, 0 otherwise
    let slope = other_rates + inputs[k].in_capacity - out_capacity;
    if u > 0.0 || (k == i && headroom > 0.0) {
        coeffs[k] = slope / headroom;
        if k != i {
            constant -= slope * inputs[k].frame_time();
        }
    }
    if k != i {
        constant += inputs[k].max_frame_len - inputs[i].envelope.rho() * inputs[i].frame_time();
    }
    Ok(AffineBacklog {
        constant,
        sigma_coeffs: coeffs,
    })
}

/// Index of the candidate achieving the minimum backlog, with its value.
pub fn mux_min_candidate(
    inputs: &[MuxInput],
    i: usize,
    out_capacity: f64,
) -> Result<(usize, f64), NetcalcError> {
    check_indices(inputs, &[i])?;
    let mut best = (i, mux_candidate_backlog(inputs, i, i, out_capacity)?);
    for k in 0..inputs.len() {
        if k == i {
            continue;
        }
        let b = mux_candidate_backlog(inputs, i, k, out_capacity)?;
        if b < best.1 {
            best = (k, b);
        }
    }
    Ok(best)
}

/// Delay bound for a bit of input `i`: the smallest candidate backlog drained
/// at the output capacity.
pub fn mux_delay_bound(
    inputs: &[MuxInput],
    i: usize,
    out_capacity: f64,
) -> Result<ComponentDelay, NetcalcError> {
    let (_, backlog) = mux_min_candidate(inputs, i, out_capacity)?;
    Ok(ComponentDelay::new(
        ComponentKind::Multiplexer,
        backlog / out_capacity,
    ))
}

/// Delay bound of a FIFO queue fed at `in_capacity` and drained at
/// `out_capacity`. Zero when the output is at least as fast as the input.
pub fn queue_delay_bound(
    env_in: &ArrivalEnvelope,
    in_capacity: f64,
    out_capacity: f64,
) -> Result<ComponentDelay, NetcalcError> {
    if !(out_capacity > 0.0) {
        return Err(NetcalcError::InvalidInput("out_capacity must be > 0"));
    }
    let headroom = in_capacity - env_in.rho();
    if headroom <= 0.0 {
        return Err(NetcalcError::NonPositiveHeadroom {
            capacity: in_capacity,
            rate: env_in.rho(),
        });
    }
    let value = if in_capacity <= out_capacity {
        0.0
    } else {
        (in_capacity - out_capacity) / headroom * env_in.sigma() / out_capacity
    };
    Ok(ComponentDelay::new(ComponentKind::Queue, value))
}

/// Routing is instantaneous.
pub fn demux_delay_bound() -> ComponentDelay {
    ComponentDelay::new(ComponentKind::Demultiplexer, 0.0)
}

/// Total delay across one switch.
pub fn switch_delay_bound(mux: ComponentDelay, queue: ComponentDelay, demux: ComponentDelay) -> f64 {
    mux.value() + queue.value() + demux.value()
}

/// Envelope of a stream after crossing a component with delay bound `delay`.
pub fn propagate_envelope(
    env: &ArrivalEnvelope,
    delay: f64,
) -> Result<ArrivalEnvelope, NetcalcError> {
    if !(delay >= 0.0) {
        return Err(NetcalcError::NegativeDelay(delay));
    }
    ArrivalEnvelope::new(env.sigma() + env.rho() * delay, env.rho())
}

#[cfg(test)]
mod tests {
    use super::*;

    const C10: f64 = 1.25e6;

    fn input(sigma: f64, rho: f64, l: f64, c: f64) -> MuxInput {
        MuxInput::new(ArrivalEnvelope::new(sigma, rho).unwrap(), l, c).unwrap()
    }

    #[test]
    fn envelope_rejects_negative() {
        assert!(ArrivalEnvelope::new(-1.0, 0.0).is_err());
        assert!(ArrivalEnvelope::new(0.0, -1.0).is_err());
        assert!(ArrivalEnvelope::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn bursty_period_values() {
        let zero = input(0.0, 5000.0, 64.0, C10);
        assert_eq!(bursty_period(&zero, BurstRole::Own).unwrap(), 0.0);

        let bg = input(1526.0, 305200.0, 1526.0, C10);
        let own = bursty_period(&bg, BurstRole::Own).unwrap();
        assert!((own - 1526.0 / 944800.0).abs() < 1e-15);
        assert!((own - 1.6152e-3).abs() < 1e-7);
        let other = bursty_period(&bg, BurstRole::Other).unwrap();
        assert!((other - (1526.0 / 944800.0 - 1526.0 / C10)).abs() < 1e-15);
        assert!((other - 3.944e-4).abs() < 1e-7);
    }

    #[test]
    fn bursty_period_clamps_negative() {
        // burst drains within one frame time
        let small = input(10.0, 1000.0, 1500.0, C10);
        assert_eq!(bursty_period(&small, BurstRole::Other).unwrap(), 0.0);
    }

    #[test]
    fn headroom_errors() {
        let env = ArrivalEnvelope::new(10.0, C10).unwrap();
        assert!(matches!(
            MuxInput::new(env, 64.0, C10),
            Err(NetcalcError::NonPositiveHeadroom { .. })
        ));
        assert!(matches!(
            queue_delay_bound(&env, C10, C10),
            Err(NetcalcError::NonPositiveHeadroom { .. })
        ));
    }

    #[test]
    fn single_idle_input_has_no_backlog() {
        let inputs = [input(0.0, 1000.0, 64.0, C10)];
        assert_eq!(mux_candidate_backlog(&inputs, 0, 0, C10).unwrap(), 0.0);
        assert_eq!(mux_delay_bound(&inputs, 0, C10).unwrap().value(), 0.0);
    }

    #[test]
    fn two_identical_inputs_own_candidate() {
        let c = 1.25e5;
        let inputs = [input(1000.0, 1e4, 100.0, c), input(1000.0, 1e4, 100.0, c)];
        let u = 1000.0 / 1.15e5;
        let expected = 1000.0 + 1e4 * (u + 100.0 / c);
        let got = mux_candidate_backlog(&inputs, 0, 0, c).unwrap();
        assert!((got - expected).abs() < 1e-9);

        // k != i, enumerated independently
        let uk = 1000.0 / 1.15e5 - 100.0 / c;
        let other = 1000.0 + 1e4 * (uk + 100.0 / c) - 1e4 * 100.0 / c + 100.0;
        let got_k = mux_candidate_backlog(&inputs, 0, 1, c).unwrap();
        assert!((got_k - other).abs() < 1e-9);
        let d = mux_delay_bound(&inputs, 0, c).unwrap();
        assert!((d.value() - expected.min(other) / c).abs() < 1e-15);
        assert_eq!(d.kind(), ComponentKind::Multiplexer);
    }

    #[test]
    fn affine_form_matches_direct_evaluation() {
        let inputs = [
            input(72.0, 7200.0, 72.0, C10),
            input(1526.0, 305200.0, 1526.0, C10),
            input(3000.0, 100000.0, 1526.0, 2.0 * C10),
        ];
        for i in 0..3 {
            for k in 0..3 {
                let direct = mux_candidate_backlog(&inputs, i, k, C10).unwrap();
                let affine = mux_candidate_affine(&inputs, i, k, C10).unwrap();
                let rel = (affine.eval(&inputs) - direct).abs() / direct.abs().max(1.0);
                assert!(rel < 1e-12, "i={i} k={k}: {direct} vs {}", affine.eval(&inputs));
            }
        }
    }

    #[test]
    fn queue_bounds() {
        let env = ArrivalEnvelope::new(1000.0, 1e4).unwrap();
        assert_eq!(queue_delay_bound(&env, 1.25e5, 1.25e5).unwrap().value(), 0.0);
        let idle = ArrivalEnvelope::new(0.0, 1e4).unwrap();
        assert_eq!(queue_delay_bound(&idle, 2.5e5, 1.25e5).unwrap().value(), 0.0);
        let d = queue_delay_bound(&env, 2.5e5, 1.25e5).unwrap().value();
        assert!((d - (1.0 / 1.25e5) * (1.25e5 / 2.4e5) * 1000.0).abs() < 1e-15);
        assert!((d - 4.167e-3).abs() < 1e-6);
        // faster output clamps to zero
        assert_eq!(queue_delay_bound(&env, 1.25e5, 2.5e5).unwrap().value(), 0.0);
    }

    #[test]
    fn demux_and_switch() {
        assert_eq!(demux_delay_bound().value(), 0.0);
        assert_eq!(demux_delay_bound().kind(), ComponentKind::Demultiplexer);
        assert_eq!(
            ComponentDelay::new(ComponentKind::Demultiplexer, 3.0).value(),
            0.0
        );
        let z = ComponentDelay::new(ComponentKind::Multiplexer, 0.0);
        let q0 = ComponentDelay::new(ComponentKind::Queue, 0.0);
        assert_eq!(switch_delay_bound(z, q0, demux_delay_bound()), 0.0);
        let m = ComponentDelay::new(ComponentKind::Multiplexer, 1.7e-3);
        let q = ComponentDelay::new(ComponentKind::Queue, 1.8e-3);
        assert!((switch_delay_bound(m, q, demux_delay_bound()) - 3.5e-3).abs() < 1e-15);
    }

    #[test]
    fn propagation() {
        let env = ArrivalEnvelope::new(72.0, 7200.0).unwrap();
        assert_eq!(propagate_envelope(&env, 0.0).unwrap(), env);
        let out = propagate_envelope(&env, 3.5e-3).unwrap();
        assert!((out.sigma() - 97.2).abs() < 1e-12);
        assert_eq!(out.rho(), 7200.0);
        assert!(((out.sigma() - 72.0) / 7200.0 - 3.5e-3).abs() < 1e-15);
        assert!(matches!(
            propagate_envelope(&env, -1e-3),
            Err(NetcalcError::NegativeDelay(_))
        ));
    }

    #[test]
    fn index_checks() {
        let inputs = [input(1.0, 1.0, 1.0, 10.0)];
        assert!(matches!(
            mux_candidate_backlog(&inputs, 0, 3, 10.0),
            Err(NetcalcError::IndexOutOfRange { .. })
        ));
        assert!(mux_delay_bound(&[], 0, 10.0).is_err());
    }
}
