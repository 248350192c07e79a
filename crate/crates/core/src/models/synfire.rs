//! Synfire ring with feed-forward inhibition.
//!
//! Partition `k` holds an excitatory RS group `E{k}` and an inhibitory FS
//! group `I{k}`. `E{k}` projects to `E{k+1}` and `I{k+1}`, and `I{k}`
//! inhibits `E{k}`. The last partition closes the ring onto partition 0. A
//! pulse-packet generator drives `E0` and `I0`.

use serde::{Deserialize, Serialize};

use super::generator::GeneratorSpec;
use super::ModelError;
use crate::kernel::{KernelConfig, KernelError, Simulator};
use crate::network::{ConnectPattern, GroupId, Network, Polarity};
use crate::neuron::{IzhikevichParams, Real};
use crate::synapse::{Delay, SynapseMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PacketStimulus {
    /// Generator units, each firing once per packet.
    pub units: u32,
    pub sigma_ms: f64,
    pub rate_hz: f64,
    pub start_ms: u64,
    /// Connection probability onto E0 and I0.
    pub p: f64,
    pub weight: Real,
    pub delay_ms: u32,
}

impl Default for PacketStimulus {
    fn default() -> Self {
        Self {
            units: 200,
            sigma_ms: 1.0,
            rate_hz: 1.0,
            start_ms: 10,
            p: 0.1,
            weight: 5.0,
            delay_ms: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynfireConfig {
    pub partitions: u32,
    pub exc_per_group: u32,
    pub inh_per_group: u32,
    pub synapse_mode: SynapseMode,
    pub p_ee: f64,
    pub p_ei: f64,
    pub p_ie: f64,
    pub w_ee: Real,
    pub w_ei: Real,
    /// Magnitude; stored negative.
    pub w_ie: Real,
    /// E to next partition (ms).
    pub delay_ms: u32,
    /// I to E within a partition (ms).
    pub inh_delay_ms: u32,
    /// Close the ring from the last partition to partition 0.
    pub recurrent: bool,
    pub stimulus: PacketStimulus,
    pub seed: u64,
}

impl Default for SynfireConfig {
    fn default() -> Self {
        Self {
            partitions: 4,
            exc_per_group: 200,
            inh_per_group: 50,
            synapse_mode: SynapseMode::Cuba,
            p_ee: 0.3,
            p_ei: 0.3,
            p_ie: 0.3,
            w_ee: 1.25,
            w_ei: 1.0,
            w_ie: 2.0,
            delay_ms: 5,
            inh_delay_ms: 1,
            recurrent: true,
            stimulus: PacketStimulus::default(),
            seed: 42,
        }
    }
}

impl SynfireConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |m: &str| Err(ModelError::Config(m.to_string()));
        if self.partitions < 2 {
            return fail("partitions must be at least 2");
        }
        if self.exc_per_group == 0 || self.inh_per_group == 0 || self.stimulus.units == 0 {
            return fail("group sizes must be at least 1");
        }
        if self.delay_ms == 0 || self.inh_delay_ms == 0 || self.stimulus.delay_ms == 0 {
            return fail("delays must be at least 1 ms");
        }
        let weights = [self.w_ee, self.w_ei, self.w_ie, self.stimulus.weight];
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return fail("weights are magnitudes and must be finite and >= 0");
        }
        Ok(())
    }

    /// Model neurons, without generator units.
    pub fn neuron_count(&self) -> u32 {
        self.partitions * (self.exc_per_group + self.inh_per_group)
    }
}

/// Group handles of a built Synfire network.
#[derive(Debug, Clone)]
pub struct Synfire {
    pub network: Network,
    pub stimulus: GroupId,
    pub exc: Vec<GroupId>,
    pub inh: Vec<GroupId>,
}

pub fn build_synfire(config: &SynfireConfig) -> Result<Synfire, ModelError> {
    config.validate()?;
    let delay = |ms: u32| -> Result<Delay, ModelError> {
        Delay::try_from(ms).map_err(|_| ModelError::Config(format!("delay {ms} ms too large")))
    };
    let d = delay(config.delay_ms)?;
    let d_inh = delay(config.inh_delay_ms)?;
    let d_stim = delay(config.stimulus.delay_ms)?;
    let mut net = Network::new(d.max(d_inh).max(d_stim), config.seed)?;
    net.set_synapse_mode(config.synapse_mode);

    let s = &config.stimulus;
    let stimulus = net.add_generator(
        "stimulus",
        s.units,
        GeneratorSpec::PulsePacket {
            rate_hz: s.rate_hz,
            start_ms: s.start_ms,
            sigma_ms: s.sigma_ms,
            seed: config.seed,
        },
        0,
    )?;
    let mut exc = Vec::new();
    let mut inh = Vec::new();
    for k in 0..config.partitions {
        exc.push(net.add_group(
            &format!("E{k}"),
            config.exc_per_group,
            IzhikevichParams::REGULAR_SPIKING,
            Polarity::Excitatory,
            k,
        )?);
        inh.push(net.add_group(
            &format!("I{k}"),
            config.inh_per_group,
            IzhikevichParams::FAST_SPIKING,
            Polarity::Inhibitory,
            k,
        )?);
    }

    let n = config.partitions as usize;
    let links = if config.recurrent { n } else { n - 1 };
    for k in 0..links {
        let next = (k + 1) % n;
        net.connect(exc[k], exc[next], ConnectPattern::Probabilistic(config.p_ee), config.w_ee, d)?;
        net.connect(exc[k], inh[next], ConnectPattern::Probabilistic(config.p_ei), config.w_ei, d)?;
    }
    for k in 0..n {
        net.connect(inh[k], exc[k], ConnectPattern::Probabilistic(config.p_ie), -config.w_ie, d_inh)?;
    }
    net.connect(stimulus, exc[0], ConnectPattern::Probabilistic(s.p), s.weight, d_stim)?;
    net.connect(stimulus, inh[0], ConnectPattern::Probabilistic(s.p), s.weight, d_stim)?;
    net.freeze()?;
    Ok(Synfire {
        network: net,
        stimulus,
        exc,
        inh,
    })
}

/// Firing summary of one group within a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupActivity {
    pub name: String,
    pub onset_ms: Option<u64>,
    pub spikes: u64,
}

/// Outcome of one calibration probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub w_ee: Real,
    /// First lap: per E group, then per I group.
    pub first_lap: Vec<GroupActivity>,
    /// Spikes of E0 after the first lap with no further stimulus.
    pub e0_returns: u64,
    /// Largest per-neuron spike count of any E group in the first lap.
    pub max_rate_per_wave: f64,
    pub accepted: bool,
}

/// Activity of the first wave after one stimulus packet. Each group's wave
/// is the spikes within `delay_ms` of its onset. Returns the per-group
/// activity (E groups, then I groups) and the number of E0 spikes after the
/// last E group's onset.
pub fn probe_wave(config: &SynfireConfig, duration_ms: u64) -> Result<(Vec<GroupActivity>, u64), KernelError> {
    let mut cfg = config.clone();
    // One packet inside the probe window.
    cfg.stimulus.rate_hz = cfg.stimulus.rate_hz.min(1000.0 / (duration_ms as f64 + 1.0)).max(1e-3);
    let built = build_synfire(&cfg).map_err(|e| KernelError::Config(e.to_string()))?;
    let mut sim = Simulator::new(&built.network, KernelConfig::default())?;
    let raster = sim.run(duration_ms)?.raster;
    let net = &built.network;
    let groups: Vec<GroupId> = built.exc.iter().chain(&built.inh).copied().collect();
    let window = cfg.delay_ms as u64;
    let mut acts: Vec<GroupActivity> = groups
        .iter()
        .map(|g| GroupActivity {
            name: net.groups()[g.0].name.clone(),
            onset_ms: None,
            spikes: 0,
        })
        .collect();
    for rec in &raster {
        let Some(g) = net.group_of(rec.neuron) else { continue };
        let Some(slot) = groups.iter().position(|&o| o == g) else { continue };
        let a = &mut acts[slot];
        let onset = *a.onset_ms.get_or_insert(rec.time);
        if rec.time < onset + window {
            a.spikes += 1;
        }
    }
    let last_onset = acts[built.exc.len() - 1].onset_ms;
    let e0 = built.exc[0];
    let returns = match last_onset {
        Some(t) => raster
            .iter()
            .filter(|r| r.time > t && net.group_of(r.neuron) == Some(e0))
            .count() as u64,
        None => 0,
    };
    Ok((acts, returns))
}

/// Time for a wave to travel once around the ring, with slack for spike
/// latency.
pub fn lap_length(config: &SynfireConfig) -> u64 {
    let hop = config.delay_ms as u64 + 4;
    hop * config.partitions as u64 + config.stimulus.delay_ms as u64
}

/// Scans `w_ee` over `grid` and reports which values give one wave per
/// stimulus that visits every E group in order, keeps each neuron to at most
/// 1.5 spikes per wave on average and returns to E0 through the recurrent link.
pub fn calibrate(base: &SynfireConfig, grid: &[Real]) -> Result<Vec<CalibrationPoint>, KernelError> {
    let mut points = Vec::with_capacity(grid.len());
    let window = 3 * lap_length(base) + base.stimulus.start_ms;
    for &w_ee in grid {
        let config = SynfireConfig { w_ee, ..base.clone() };
        let (first_lap, e0_returns) = probe_wave(&config, window)?;
        let n = config.partitions as usize;
        let exc = &first_lap[..n];
        let inh = &first_lap[n..];
        let max_rate_per_wave = exc
            .iter()
            .map(|a| a.spikes as f64 / config.exc_per_group as f64)
            .fold(0.0, f64::max);
        let ordered = exc.windows(2).all(|w| match (w[0].onset_ms, w[1].onset_ms) {
            (Some(a), Some(b)) => b > a,
            _ => false,
        });
        let recruited = exc.iter().all(|a| a.spikes as f64 >= 0.5 * config.exc_per_group as f64);
        let inhibited = exc.iter().zip(inh).all(|(e, i)| match (e.onset_ms, i.onset_ms) {
            (Some(e), Some(i)) => i + 10 >= e && i <= e + 10,
            _ => false,
        });
        let accepted = ordered
            && recruited
            && inhibited
            && max_rate_per_wave <= 1.5
            && (!config.recurrent || e0_returns as f64 >= 0.5 * config.exc_per_group as f64);
        points.push(CalibrationPoint {
            w_ee,
            first_lap,
            e0_returns,
            max_rate_per_wave,
            accepted,
        });
    }
    Ok(points)
}

/// Middle of the longest run of accepted grid points.
pub fn pick_calibrated(points: &[CalibrationPoint]) -> Option<Real> {
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for (k, p) in points.iter().enumerate() {
        match (p.accepted, start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                if best.is_none_or(|(a, b)| k - s > b - a) {
                    best = Some((s, k));
                }
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        if best.is_none_or(|(a, b)| points.len() - s > b - a) {
            best = Some((s, points.len()));
        }
    }
    best.map(|(a, b)| points[(a + b - 1) / 2].w_ee)
}
