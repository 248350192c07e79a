//! Chainfire: parallel excitatory chains with synchronisation neurons, used
//! as a controllable synthetic load.
//!
//! Each cluster is a `rows x columns` grid of RS neurons, where
//! `columns = span / d` and `rows = N / columns`. Column `c` row `r`
//! excites column `c + 1` row `r`. A sync neuron in front of every cluster
//! fans out to its first column; the last column converges onto the next
//! sync neuron. The sync neuron after the last cluster is the terminal one.
//! A periodic generator drives the first sync neuron.
//!
//! Local index of grid cell (row, col) is `col * rows + row`.

use serde::{Deserialize, Serialize};

use super::generator::GeneratorSpec;
use super::ModelError;
use crate::network::{ConnectPattern, GroupId, Network, Polarity};
use crate::neuron::{IzhikevichParams, Real};
use crate::synapse::{Delay, SynapseMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainfireConfig {
    pub clusters: u32,
    /// Neurons per cluster.
    pub neurons_per_cluster: u32,
    /// Spacing between column activations (ms).
    pub d_ms: u32,
    /// Chain length per cluster (ms).
    pub span_ms: u32,
    /// Row-wise chain weight.
    pub w_exc: Real,
    /// Base synaptic delay (ms). Column-to-column synapses are padded to `d_ms`.
    pub d_exc_ms: u32,
    /// Weight that makes one target fire exactly once. Sync fan-out uses it
    /// per synapse; sync fan-in divides it over the `rows` sources.
    pub sync_weight: Real,
    pub stimulus_rate_hz: f64,
    pub synapse_mode: SynapseMode,
    pub seed: u64,
}

impl Default for ChainfireConfig {
    fn default() -> Self {
        Self {
            clusters: 4,
            neurons_per_cluster: 500,
            d_ms: 20,
            span_ms: 100,
            w_exc: 0.432,
            d_exc_ms: 5,
            sync_weight: 0.432,
            stimulus_rate_hz: 1.0,
            synapse_mode: SynapseMode::Coba,
            seed: 0,
        }
    }
}

impl ChainfireConfig {
    pub fn columns(&self) -> u32 {
        self.span_ms / self.d_ms.max(1)
    }

    pub fn rows(&self) -> u32 {
        self.neurons_per_cluster / self.columns().max(1)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |m: String| Err(ModelError::Config(m));
        if self.clusters == 0 || self.neurons_per_cluster == 0 {
            return fail("clusters and neurons_per_cluster must be at least 1".into());
        }
        if self.d_ms == 0 || self.d_exc_ms == 0 || self.d_exc_ms > self.d_ms {
            return fail(format!(
                "delays must satisfy 1 <= d_exc ({}) <= d ({})",
                self.d_exc_ms, self.d_ms
            ));
        }
        if self.span_ms == 0 || !self.span_ms.is_multiple_of(self.d_ms) {
            return fail(format!("span {} ms is not a multiple of d = {} ms", self.span_ms, self.d_ms));
        }
        if !self.neurons_per_cluster.is_multiple_of(self.columns()) {
            return fail(format!(
                "N = {} is not divisible by {} columns",
                self.neurons_per_cluster,
                self.columns()
            ));
        }
        if !(self.w_exc > 0.0 && self.sync_weight > 0.0) {
            return fail("weights must be positive".into());
        }
        Ok(())
    }

    /// Grid neurons plus sync neurons; the generator is not counted.
    pub fn neuron_count(&self) -> u32 {
        self.clusters * self.neurons_per_cluster + self.clusters + 1
    }
}

/// Group handles of a built Chainfire network.
#[derive(Debug, Clone)]
pub struct Chainfire {
    pub network: Network,
    pub stimulus: GroupId,
    /// `clusters + 1` sync neurons; the last one is terminal.
    pub sync: GroupId,
    pub clusters: Vec<GroupId>,
}

impl Chainfire {
    /// Global id of the terminal sync neuron.
    pub fn terminal_sync(&self) -> u32 {
        let g = &self.network.groups()[self.sync.0];
        g.start + g.size - 1
    }
}

pub fn build_chainfire(config: &ChainfireConfig) -> Result<Chainfire, ModelError> {
    config.validate()?;
    let delay = |ms: u32| -> Result<Delay, ModelError> {
        Delay::try_from(ms).map_err(|_| ModelError::Config(format!("delay {ms} ms too large")))
    };
    let d = delay(config.d_ms)?;
    let d_exc = delay(config.d_exc_ms)?;
    let rows = config.rows();
    let columns = config.columns();
    let rs = IzhikevichParams::REGULAR_SPIKING;

    let mut net = Network::new(d.max(d_exc), config.seed)?;
    net.set_synapse_mode(config.synapse_mode);
    let stimulus = net.add_generator(
        "stimulus",
        1,
        GeneratorSpec::Periodic {
            rate_hz: config.stimulus_rate_hz,
            start_ms: 0,
        },
        0,
    )?;
    let sync = net.add_group("sync", config.clusters + 1, rs, Polarity::Excitatory, 0)?;
    let clusters = (0..config.clusters)
        .map(|k| net.add_group(&format!("cluster{k}"), config.neurons_per_cluster, rs, Polarity::Excitatory, k))
        .collect::<Result<Vec<_>, _>>()?;

    net.connect(stimulus, sync, ConnectPattern::Explicit(vec![(0, 0)]), config.sync_weight, d)?;
    let chain: Vec<(u32, u32)> = (0..columns - 1)
        .flat_map(|c| (0..rows).map(move |r| (c * rows + r, (c + 1) * rows + r)))
        .collect();
    let fan_in_weight = config.sync_weight / rows as Real;
    for (k, &cluster) in clusters.iter().enumerate() {
        let k = k as u32;
        let first_column = (0..rows).map(|r| (k, r)).collect();
        net.connect(sync, cluster, ConnectPattern::Explicit(first_column), config.sync_weight, d_exc)?;
        net.connect(cluster, cluster, ConnectPattern::Explicit(chain.clone()), config.w_exc, d)?;
        let last_column = (0..rows).map(|r| ((columns - 1) * rows + r, k + 1)).collect();
        net.connect(cluster, sync, ConnectPattern::Explicit(last_column), fan_in_weight, d)?;
    }
    net.freeze()?;
    Ok(Chainfire {
        network: net,
        stimulus,
        sync,
        clusters,
    })
}
