//! Connection storage, delayed spike delivery and CUBA/COBA fan-in.

use serde::{Deserialize, Serialize};

use crate::neuron::Real;

pub type NeuronId = u32;
/// Axonal delay in whole ms.
pub type Delay = u16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Synapse {
    pub pre: NeuronId,
    pub post: NeuronId,
    /// Signed efficacy. Inhibitory sources carry weights <= 0.
    pub weight: Real,
    pub delay: Delay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynapseMode {
    /// Current based: the delivered weight is the input current for the ms.
    #[default]
    Cuba,
    /// Conductance based with single-exponential decay.
    Coba,
}

impl std::str::FromStr for SynapseMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cuba" => Ok(SynapseMode::Cuba),
            "coba" => Ok(SynapseMode::Coba),
            other => Err(format!("unknown synapse mode '{other}' (expected cuba or coba)")),
        }
    }
}

/// Reversal potentials (mV) and decay constants (ms) for COBA synapses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CobaParams {
    pub e_exc: Real,
    pub e_inh: Real,
    pub tau_exc: Real,
    pub tau_inh: Real,
}

impl Default for CobaParams {
    fn default() -> Self {
        Self {
            e_exc: 0.0,
            e_inh: -90.0,
            tau_exc: 5.0,
            tau_inh: 6.0,
        }
    }
}

/// `g_exc (E_exc - v) + g_inh (E_inh - v)`.
#[inline(always)]
pub fn coba_current(g_exc: Real, g_inh: Real, v: Real, p: &CobaParams) -> Real {
    g_exc * (p.e_exc - v) + g_inh * (p.e_inh - v)
}

/// Per-step multiplicative decay `exp(-dt / tau)` for both channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFactors {
    pub exc: Real,
    pub inh: Real,
}

impl DecayFactors {
    pub fn new(p: &CobaParams, dt: Real) -> Self {
        Self {
            exc: (-dt / p.tau_exc).exp(),
            inh: (-dt / p.tau_inh).exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FanInEntry {
    pub pre: NeuronId,
    pub weight: Real,
    pub delay: Delay,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FanOutEntry {
    pub post: NeuronId,
    pub weight: Real,
    pub delay: Delay,
}

/// Compressed adjacency in both directions. Fan-in lists are sorted by
/// (pre, delay), fan-out lists by (post, delay); ties keep insertion order.
/// Immutable once built.
#[derive(Debug, Clone, Default)]
pub struct ConnectionTable {
    fan_in_offsets: Vec<usize>,
    fan_in: Vec<FanInEntry>,
    fan_out_offsets: Vec<usize>,
    fan_out: Vec<FanOutEntry>,
}

impl ConnectionTable {
    /// `units` is the total id space (neurons plus generator units).
    pub fn build(units: usize, synapses: &[Synapse]) -> Self {
        let mut by_post: Vec<&Synapse> = synapses.iter().collect();
        by_post.sort_by_key(|s| (s.post, s.pre, s.delay));
        let mut by_pre: Vec<&Synapse> = synapses.iter().collect();
        by_pre.sort_by_key(|s| (s.pre, s.post, s.delay));

        let fan_in_offsets = offsets(units, by_post.iter().map(|s| s.post));
        let fan_out_offsets = offsets(units, by_pre.iter().map(|s| s.pre));
        let fan_in = by_post
            .iter()
            .map(|s| FanInEntry {
                pre: s.pre,
                weight: s.weight,
                delay: s.delay,
            })
            .collect();
        let fan_out = by_pre
            .iter()
            .map(|s| FanOutEntry {
                post: s.post,
                weight: s.weight,
                delay: s.delay,
            })
            .collect();
        Self {
            fan_in_offsets,
            fan_in,
            fan_out_offsets,
            fan_out,
        }
    }

    pub fn units(&self) -> usize {
        self.fan_in_offsets.len().saturating_sub(1)
    }

    pub fn len(&self) -> usize {
        self.fan_in.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fan_in.is_empty()
    }

    pub fn fan_in(&self, post: NeuronId) -> &[FanInEntry] {
        let p = post as usize;
        &self.fan_in[self.fan_in_offsets[p]..self.fan_in_offsets[p + 1]]
    }

    pub fn fan_out(&self, pre: NeuronId) -> &[FanOutEntry] {
        let p = pre as usize;
        &self.fan_out[self.fan_out_offsets[p]..self.fan_out_offsets[p + 1]]
    }

    pub fn max_delay(&self) -> Delay {
        self.fan_in.iter().map(|e| e.delay).max().unwrap_or(0)
    }
}

fn offsets(units: usize, keys: impl Iterator<Item = NeuronId>) -> Vec<usize> {
    let mut offsets = vec![0usize; units + 1];
    for k in keys {
        offsets[k as usize + 1] += 1;
    }
    for i in 0..units {
        offsets[i + 1] += offsets[i];
    }
    offsets
}

/// Ring of `max_delay + 1` per-ms slots holding the drive each neuron will
/// receive at that ms. CUBA accumulates signed weights into the excitatory
/// channel; COBA routes negative weights, as magnitudes, to the inhibitory
/// channel.
#[derive(Debug, Clone)]
pub struct DelayedSpikeBuffer {
    units: usize,
    max_delay: Delay,
    exc: Vec<Vec<Real>>,
    inh: Vec<Vec<Real>>,
}

impl DelayedSpikeBuffer {
    pub fn new(units: usize, max_delay: Delay) -> Self {
        let ring = max_delay as usize + 1;
        Self {
            units,
            max_delay,
            exc: vec![vec![0.0; units]; ring],
            inh: vec![vec![0.0; units]; ring],
        }
    }

    pub fn max_delay(&self) -> Delay {
        self.max_delay
    }

    #[inline]
    fn slot(&self, t: u64) -> usize {
        (t % self.exc.len() as u64) as usize
    }

    /// Schedules one spike emitted at ms `t` along `fan_out`.
    ///
    /// Panics if an entry's delay is 0 or above `max_delay`.
    pub fn enqueue_spike(&mut self, fan_out: &[FanOutEntry], t: u64, mode: SynapseMode) {
        for e in fan_out {
            assert!(
                e.delay >= 1 && e.delay <= self.max_delay,
                "delay {} outside 1..={}",
                e.delay,
                self.max_delay
            );
            let s = self.slot(t + e.delay as u64);
            let post = e.post as usize;
            match mode {
                SynapseMode::Cuba => self.exc[s][post] += e.weight,
                SynapseMode::Coba if e.weight < 0.0 => self.inh[s][post] -= e.weight,
                SynapseMode::Coba => self.exc[s][post] += e.weight,
            }
        }
    }

    /// Drive queued for `neuron` at ms `t`, as `(exc, inh)`.
    pub fn pending(&self, neuron: NeuronId, t: u64) -> (Real, Real) {
        let s = self.slot(t);
        (self.exc[s][neuron as usize], self.inh[s][neuron as usize])
    }

    /// Moves the slot for ms `t` into `exc`/`inh` and leaves a zeroed slot
    /// behind for `t + max_delay + 1`.
    pub fn take_slot(&mut self, t: u64, exc: &mut Vec<Real>, inh: &mut Vec<Real>) {
        let s = self.slot(t);
        exc.resize(self.units, 0.0);
        inh.resize(self.units, 0.0);
        std::mem::swap(&mut self.exc[s], exc);
        std::mem::swap(&mut self.inh[s], inh);
        self.exc[s].iter_mut().for_each(|x| *x = 0.0);
        self.inh[s].iter_mut().for_each(|x| *x = 0.0);
    }

    pub fn clear(&mut self) {
        for slot in self.exc.iter_mut().chain(self.inh.iter_mut()) {
            slot.iter_mut().for_each(|x| *x = 0.0);
        }
    }
}

/// Synaptic input state for every unit: this ms's arrivals and, under COBA,
/// the decaying conductances.
#[derive(Debug, Clone)]
pub struct SynapticDrive {
    mode: SynapseMode,
    coba: CobaParams,
    arrivals_exc: Vec<Real>,
    arrivals_inh: Vec<Real>,
    g_exc: Vec<Real>,
    g_inh: Vec<Real>,
}

impl SynapticDrive {
    pub fn new(units: usize, mode: SynapseMode, coba: CobaParams) -> Self {
        Self {
            mode,
            coba,
            arrivals_exc: vec![0.0; units],
            arrivals_inh: vec![0.0; units],
            g_exc: vec![0.0; units],
            g_inh: vec![0.0; units],
        }
    }

    pub fn mode(&self) -> SynapseMode {
        self.mode
    }

    pub fn coba_params(&self) -> &CobaParams {
        &self.coba
    }

    /// Pulls the deliveries for ms `t` out of `buffer`. Under COBA they are
    /// added to the conductances before the first sub-step.
    pub fn begin_ms(&mut self, buffer: &mut DelayedSpikeBuffer, t: u64) {
        buffer.take_slot(t, &mut self.arrivals_exc, &mut self.arrivals_inh);
        if self.mode == SynapseMode::Coba {
            for (g, a) in self.g_exc.iter_mut().zip(&self.arrivals_exc) {
                *g += *a;
            }
            for (g, a) in self.g_inh.iter_mut().zip(&self.arrivals_inh) {
                *g += *a;
            }
        }
    }

    /// Input current for `neuron` at membrane potential `v`. Under CUBA this
    /// is the same for every sub-step of the ms.
    #[inline]
    pub fn fan_in_current(&self, neuron: NeuronId, v: Real) -> Real {
        let n = neuron as usize;
        match self.mode {
            SynapseMode::Cuba => self.arrivals_exc[n],
            SynapseMode::Coba => coba_current(self.g_exc[n], self.g_inh[n], v, &self.coba),
        }
    }

    pub fn conductances(&self, neuron: NeuronId) -> (Real, Real) {
        (self.g_exc[neuron as usize], self.g_inh[neuron as usize])
    }

    pub fn set_conductances(&mut self, neuron: NeuronId, g_exc: Real, g_inh: Real) {
        self.g_exc[neuron as usize] = g_exc;
        self.g_inh[neuron as usize] = g_inh;
    }

    /// `g <- g * exp(-dt / tau)` on both channels of every unit.
    pub fn decay_conductances(&mut self, dt: Real) {
        let f = DecayFactors::new(&self.coba, dt);
        self.g_exc.iter_mut().for_each(|g| *g *= f.exc);
        self.g_inh.iter_mut().for_each(|g| *g *= f.inh);
    }

    pub fn reset(&mut self) {
        for buf in [
            &mut self.arrivals_exc,
            &mut self.arrivals_inh,
            &mut self.g_exc,
            &mut self.g_inh,
        ] {
            buf.iter_mut().for_each(|x| *x = 0.0);
        }
    }

    /// Split borrows for the kernel: arrivals (read-only) and conductances.
    pub(crate) fn kernel_parts(&mut self) -> (&[Real], &mut [Real], &mut [Real]) {
        (&self.arrivals_exc, &mut self.g_exc, &mut self.g_inh)
    }
}
