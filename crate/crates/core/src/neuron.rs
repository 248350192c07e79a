//! Izhikevich four-parameter neuron dynamics.
//!
//! ```text
//! dv/dt = 0.04 v^2 + 5 v + 140 - u + I
//! du/dt = a (b v - u)
//! if v >= 30: v <- c, u <- u + d
//! ```
//!
//! Everything here is a pure function over value types so it can be called
//! from any worker without synchronisation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Floating point type for all neuron and synapse state.
#[cfg(not(feature = "f32"))]
pub type Real = f64;
/// Floating point type for all neuron and synapse state.
#[cfg(feature = "f32")]
pub type Real = f32;

/// Membrane potential (mV) at or above which a spike is emitted.
pub const SPIKE_THRESHOLD: Real = 30.0;

#[derive(Debug, Error, PartialEq)]
pub enum NeuronError {
    #[error("recovery time scale a must be positive and finite, got {0}")]
    TimeScale(Real),
    #[error("recovery increment d must be non-negative and finite, got {0}")]
    Increment(Real),
    #[error("neuron parameter {0} is not finite")]
    NonFinite(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IzhikevichParams {
    /// Recovery time scale (1/ms).
    pub a: Real,
    /// Recovery sensitivity to sub-threshold v.
    pub b: Real,
    /// After-spike reset potential (mV).
    pub c: Real,
    /// After-spike recovery increment.
    pub d: Real,
}

impl IzhikevichParams {
    /// Regular spiking cortical pyramidal cell.
    pub const REGULAR_SPIKING: Self = Self {
        a: 0.02,
        b: 0.2,
        c: -65.0,
        d: 8.0,
    };

    /// Fast spiking interneuron.
    pub const FAST_SPIKING: Self = Self {
        a: 0.1,
        b: 0.2,
        c: -65.0,
        d: 2.0,
    };

    pub fn new(a: Real, b: Real, c: Real, d: Real) -> Result<Self, NeuronError> {
        let params = Self { a, b, c, d };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), NeuronError> {
        if !self.b.is_finite() {
            return Err(NeuronError::NonFinite("b"));
        }
        if !self.c.is_finite() {
            return Err(NeuronError::NonFinite("c"));
        }
        if !(self.a.is_finite() && self.a > 0.0) {
            return Err(NeuronError::TimeScale(self.a));
        }
        if !(self.d.is_finite() && self.d >= 0.0) {
            return Err(NeuronError::Increment(self.d));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeuronState {
    /// Membrane potential (mV).
    pub v: Real,
    /// Recovery variable.
    pub u: Real,
    /// Set when the last reset check emitted a spike.
    pub fired: bool,
}

impl NeuronState {
    pub fn new(v: Real, u: Real) -> Self {
        Self { v, u, fired: false }
    }

    /// Start-of-simulation state: `v = c`, `u = b * c`.
    pub fn initial(params: &IzhikevichParams) -> Self {
        Self::new(params.c, params.b * params.c)
    }
}

/// Right-hand side of the two-variable system, `(dv/dt, du/dt)`.
#[inline]
pub fn derivative(state: &NeuronState, params: &IzhikevichParams, i_syn: Real) -> (Real, Real) {
    rhs(state.v, state.u, params, i_syn)
}

#[inline(always)]
fn rhs(v: Real, u: Real, p: &IzhikevichParams, i_syn: Real) -> (Real, Real) {
    (
        0.04 * v * v + 5.0 * v + 140.0 - u + i_syn,
        p.a * (p.b * v - u),
    )
}

/// Forward Euler step. No reset is applied.
#[inline]
pub fn step_euler(state: &NeuronState, params: &IzhikevichParams, i_syn: Real, dt: Real) -> NeuronState {
    let (dv, du) = rhs(state.v, state.u, params, i_syn);
    NeuronState::new(state.v + dt * dv, state.u + dt * du)
}

/// Classical fourth-order Runge-Kutta step with `i_syn` held over all four
/// stages. No reset is applied.
#[inline]
pub fn step_rk4(state: &NeuronState, params: &IzhikevichParams, i_syn: Real, dt: Real) -> NeuronState {
    let (v, u) = (state.v, state.u);
    let half = 0.5 * dt;
    let (k1v, k1u) = rhs(v, u, params, i_syn);
    let (k2v, k2u) = rhs(v + half * k1v, u + half * k1u, params, i_syn);
    let (k3v, k3u) = rhs(v + half * k2v, u + half * k2u, params, i_syn);
    let (k4v, k4u) = rhs(v + dt * k3v, u + dt * k3u, params, i_syn);
    let sixth = dt / 6.0;
    NeuronState::new(
        v + sixth * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
        u + sixth * (k1u + 2.0 * k2u + 2.0 * k3u + k4u),
    )
}

/// Threshold check and after-spike reset. Returns the new state and whether
/// a spike was emitted.
#[inline]
pub fn apply_reset(state: &NeuronState, params: &IzhikevichParams) -> (NeuronState, bool) {
    if state.v >= SPIKE_THRESHOLD {
        let next = NeuronState {
            v: params.c,
            u: state.u + params.d,
            fired: true,
        };
        (next, true)
    } else {
        (
            NeuronState {
                fired: false,
                ..*state
            },
            false,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    #[default]
    Euler,
    Rk4,
}

impl Integrator {
    #[inline]
    pub fn step(self, state: &NeuronState, params: &IzhikevichParams, i_syn: Real, dt: Real) -> NeuronState {
        match self {
            Integrator::Euler => step_euler(state, params, i_syn, dt),
            Integrator::Rk4 => step_rk4(state, params, i_syn, dt),
        }
    }
}

impl std::str::FromStr for Integrator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "euler" => Ok(Integrator::Euler),
            "rk4" => Ok(Integrator::Rk4),
            other => Err(format!("unknown integrator '{other}' (expected euler or rk4)")),
        }
    }
}

/// Integrates one neuron under a constant drive for `duration_ms` using
/// `steps_per_ms` sub-steps, resetting after every step. Returns the state
/// at every ms boundary (length `duration_ms + 1`) and the ms of each spike.
pub fn trajectory(
    params: &IzhikevichParams,
    start: NeuronState,
    i_syn: Real,
    integrator: Integrator,
    steps_per_ms: u32,
    duration_ms: u32,
) -> (Vec<NeuronState>, Vec<u32>) {
    let dt = 1.0 / steps_per_ms as Real;
    let mut state = start;
    let mut samples = Vec::with_capacity(duration_ms as usize + 1);
    let mut spikes = Vec::new();
    samples.push(state);
    for ms in 0..duration_ms {
        for _ in 0..steps_per_ms {
            let (next, spiked) = apply_reset(&integrator.step(&state, params, i_syn, dt), params);
            if spiked {
                spikes.push(ms);
            }
            state = next;
        }
        samples.push(state);
    }
    (samples, spikes)
}
