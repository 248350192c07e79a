//! Time-driven simulation kernel.
//!
//! Each model ms: deliver due spikes, emit generator spikes, run
//! `steps_per_ms` integration steps over every neuron group, then merge the
//! per-worker spike lists, record them and enqueue their fan-out. Groups are
//! split into chunks dealt round-robin to the active workers. Spike lists are
//! sorted by id before anything reads them, so rasters and state do not
//! depend on the worker count.

mod executor;
mod update;

use std::ops::Range;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use executor::Backend;
pub use crate::network::Partition;

use crate::dca::{DcaConfig, DcaError, DcaState, DcaTraceRow};
use crate::models::generator::StimulusSource;
use crate::monitor::{MonitorError, PerfSample, SpikeMonitor, SpikeRecord, DEFAULT_RECORD_CAP};
use crate::network::{stimulus_for, Network, NetworkError};
use crate::neuron::{Integrator, IzhikevichParams, NeuronState, Real};
use crate::synapse::{
    CobaParams, ConnectionTable, DecayFactors, DelayedSpikeBuffer, NeuronId, SynapseMode, SynapticDrive,
};
use executor::Executor;
use update::{update_chunk, Chunk, StepCtx};

#[derive(Debug, Error)]
pub enum KernelError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("invalid kernel config: {0}")]
    Config(String),
    #[error("worker count {requested} outside 1..={max}")]
    WorkerCount { requested: usize, max: usize },
    #[error(transparent)]
    Dca(#[from] DcaError),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
    #[error("barrier check failed at step {step}: {detail}")]
    Barrier { step: u64, detail: String },
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Modeled extra work per ms from `from_ms` on, given as its wall time in
/// ms at one worker. The DCA observation adds `extra_ms / workers`. Steps
/// are piecewise constant; the latest one in effect wins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadStep {
    pub from_ms: u64,
    pub extra_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelConfig {
    pub steps_per_ms: u32,
    /// Initial worker count.
    pub threads: usize,
    /// Pool size. Defaults to the larger of `threads` and the DCA maximum.
    pub max_threads: Option<usize>,
    pub integrator: Integrator,
    /// Overrides the network's synapse mode.
    pub synapse_mode: Option<SynapseMode>,
    pub coba: CobaParams,
    pub dca_enabled: bool,
    pub dca: DcaConfig,
    pub backend: Backend,
    /// Lower bound on neurons per chunk.
    pub chunk_min: usize,
    /// In-memory raster records before spilling to disk.
    pub record_cap: usize,
    /// Verify with per-neuron generation counters that every neuron is
    /// updated exactly once per step.
    pub check_barriers: bool,
    pub injected_load: Vec<LoadStep>,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            steps_per_ms: 2,
            threads: 1,
            max_threads: None,
            integrator: Integrator::Euler,
            synapse_mode: None,
            coba: CobaParams::default(),
            dca_enabled: false,
            dca: DcaConfig::default(),
            backend: Backend::default(),
            chunk_min: 64,
            record_cap: DEFAULT_RECORD_CAP,
            check_barriers: false,
            injected_load: Vec::new(),
        }
    }
}

impl KernelConfig {
    pub fn validate(&self) -> Result<(), KernelError> {
        let fail = |m: String| Err(KernelError::Config(m));
        if self.steps_per_ms == 0 {
            return fail("steps_per_ms must be at least 1".into());
        }
        if self.threads == 0 {
            return fail("threads must be at least 1".into());
        }
        if self.chunk_min == 0 {
            return fail("chunk_min must be at least 1".into());
        }
        if let Some(max) = self.max_threads {
            if max < self.threads {
                return fail(format!("max_threads {max} below threads {}", self.threads));
            }
        }
        if self.injected_load.iter().any(|s| !(s.extra_ms.is_finite() && s.extra_ms >= 0.0)) {
            return fail("injected load must be finite and non-negative".into());
        }
        if self.dca_enabled {
            self.dca.validate()?;
            if !(self.dca.min_workers..=self.dca.max_workers).contains(&self.threads) {
                return fail(format!(
                    "initial threads {} outside DCA bounds {}..={}",
                    self.threads, self.dca.min_workers, self.dca.max_workers
                ));
            }
        }
        Ok(())
    }

    fn pool_size(&self) -> usize {
        let dca_max = if self.dca_enabled { self.dca.max_workers } else { 0 };
        self.max_threads.unwrap_or(0).max(self.threads).max(dca_max)
    }

    fn injected_at(&self, t: u64) -> f64 {
        self.injected_load
            .iter()
            .filter(|s| s.from_ms <= t)
            .max_by_key(|s| s.from_ms)
            .map_or(0.0, |s| s.extra_ms)
    }
}

/// Neurons emitted per group over the run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSpikes {
    pub name: String,
    pub count: u64,
}

#[derive(Debug, Clone)]
pub struct SimResult {
    pub model_ms: u64,
    /// Neuron spikes; generator output is not counted.
    pub total_spikes: u64,
    pub group_spikes: Vec<GroupSpikes>,
    pub raster: Vec<SpikeRecord>,
    pub perf: Vec<PerfSample>,
    pub dca_trace: Vec<DcaTraceRow>,
    /// Wall time of the timed loop in seconds.
    pub execution_s: f64,
}

struct NeuronGroup {
    index: usize,
    range: Range<NeuronId>,
    params: IzhikevichParams,
}

pub struct Simulator<'n> {
    table: &'n ConnectionTable,
    names: Vec<String>,
    config: KernelConfig,
    mode: SynapseMode,
    dt: Real,
    decay: DecayFactors,
    neuron_groups: Vec<NeuronGroup>,
    group_of_unit: Vec<u32>,
    generators: Vec<(NeuronId, StimulusSource)>,
    v: Vec<Real>,
    u: Vec<Real>,
    generations: Vec<u64>,
    generation: u64,
    drive: SynapticDrive,
    buffer: DelayedSpikeBuffer,
    executor: Executor,
    pool_size: usize,
    workers: usize,
    staging: Vec<Vec<NeuronId>>,
    fired: Vec<NeuronId>,
    scratch: Vec<u32>,
    monitor: SpikeMonitor,
    group_counts: Vec<u64>,
    total_spikes: u64,
    perf: Vec<PerfSample>,
    dca: Option<DcaState>,
    dca_trace: Vec<DcaTraceRow>,
    t: u64,
}

impl<'n> Simulator<'n> {
    pub fn new(network: &'n Network, config: KernelConfig) -> Result<Self, KernelError> {
        config.validate()?;
        let table = network.table()?;
        let units = network.units() as usize;
        let mode = config.synapse_mode.unwrap_or(network.synapse_mode());
        let dt = 1.0 / config.steps_per_ms as Real;

        let mut neuron_groups = Vec::new();
        let mut generators = Vec::new();
        let mut group_of_unit = vec![0u32; units];
        for (index, group) in network.groups().iter().enumerate() {
            for id in group.range() {
                group_of_unit[id as usize] = index as u32;
            }
            match group.params() {
                Some(params) => neuron_groups.push(NeuronGroup {
                    index,
                    range: group.range(),
                    params: *params,
                }),
                None => {
                    let source = stimulus_for(group).ok_or_else(|| {
                        KernelError::Config(format!("generator '{}' has an invalid spec", group.name))
                    })?;
                    generators.push((group.start, source));
                }
            }
        }

        let pool_size = config.pool_size();
        let dca = if config.dca_enabled {
            Some(DcaState::new(config.dca.clone(), config.threads)?)
        } else {
            None
        };
        let mut sim = Self {
            table,
            names: network.groups().iter().map(|g| g.name.clone()).collect(),
            mode,
            dt,
            decay: DecayFactors::new(&config.coba, dt),
            neuron_groups,
            group_of_unit,
            generators,
            v: vec![0.0; units],
            u: vec![0.0; units],
            generations: vec![0; units],
            generation: 0,
            drive: SynapticDrive::new(units, mode, config.coba),
            buffer: DelayedSpikeBuffer::new(units, network.max_delay()),
            executor: Executor::new(config.backend, pool_size)?,
            pool_size,
            workers: config.threads,
            staging: (0..pool_size).map(|_| Vec::new()).collect(),
            fired: Vec::new(),
            scratch: Vec::new(),
            monitor: SpikeMonitor::with_cap(config.record_cap),
            group_counts: vec![0; network.groups().len()],
            total_spikes: 0,
            perf: Vec::new(),
            dca,
            dca_trace: Vec::new(),
            t: 0,
            config,
        };
        sim.reset()?;
        Ok(sim)
    }

    /// Restores initial neuron state, empties the delay buffer and drops all
    /// recordings. Model time restarts at 0.
    pub fn reset(&mut self) -> Result<(), KernelError> {
        for g in &self.neuron_groups {
            let s = NeuronState::initial(&g.params);
            let r = g.range.start as usize..g.range.end as usize;
            self.v[r.clone()].iter_mut().for_each(|v| *v = s.v);
            self.u[r].iter_mut().for_each(|u| *u = s.u);
        }
        self.generations.iter_mut().for_each(|g| *g = 0);
        self.generation = 0;
        self.drive.reset();
        self.buffer.clear();
        self.monitor = SpikeMonitor::with_cap(self.config.record_cap);
        self.group_counts.iter_mut().for_each(|c| *c = 0);
        self.total_spikes = 0;
        self.perf.clear();
        self.dca_trace.clear();
        self.workers = self.config.threads;
        if self.config.dca_enabled {
            self.dca = Some(DcaState::new(self.config.dca.clone(), self.config.threads)?);
        }
        self.t = 0;
        Ok(())
    }

    /// Runs `ms` untimed model ms and then resets.
    pub fn warmup(&mut self, ms: u64) -> Result<(), KernelError> {
        for _ in 0..ms {
            self.advance_ms()?;
        }
        self.reset()
    }

    pub fn model_time(&self) -> u64 {
        self.t
    }

    pub fn worker_count(&self) -> usize {
        self.workers
    }

    pub fn pool_size(&self) -> usize {
        self.pool_size
    }

    pub fn is_parallel(&self) -> bool {
        self.executor.is_parallel()
    }

    pub fn synapse_mode(&self) -> SynapseMode {
        self.mode
    }

    /// Takes effect from the next ms.
    pub fn set_worker_count(&mut self, n: usize) -> Result<(), KernelError> {
        if n == 0 || n > self.pool_size {
            return Err(KernelError::WorkerCount {
                requested: n,
                max: self.pool_size,
            });
        }
        self.workers = n;
        Ok(())
    }

    /// Membrane potentials and recovery variables of every unit. Generator
    /// slots stay at zero.
    pub fn state(&self) -> (&[Real], &[Real]) {
        (&self.v, &self.u)
    }

    pub fn conductances(&self, neuron: NeuronId) -> (Real, Real) {
        self.drive.conductances(neuron)
    }

    pub fn total_spikes(&self) -> u64 {
        self.total_spikes
    }

    /// Advances the model by one ms.
    pub fn advance_ms(&mut self) -> Result<(), KernelError> {
        let started = Instant::now();
        let t = self.t;
        self.drive.begin_ms(&mut self.buffer, t);

        self.fired.clear();
        for (start, source) in &self.generators {
            self.scratch.clear();
            source.spikes_at(t, &mut self.scratch);
            self.fired.extend(self.scratch.iter().map(|&k| start + k));
        }
        let generated = self.fired.len();

        for _ in 0..self.config.steps_per_ms {
            self.step()?;
        }

        for list in &mut self.staging[..self.pool_size] {
            self.fired.append(list);
        }
        // Stable: a neuron that fired in two sub-steps keeps both entries.
        self.fired[generated..].sort();
        let spikes = (self.fired.len() - generated) as u32;
        for &id in &self.fired[generated..] {
            self.monitor.record_spike(id, t)?;
            self.group_counts[self.group_of_unit[id as usize] as usize] += 1;
        }
        self.total_spikes += spikes as u64;

        self.fired.sort();
        for &id in &self.fired {
            self.buffer.enqueue_spike(self.table.fan_out(id), t, self.mode);
        }

        let wall_ns = started.elapsed().as_nanos() as u64;
        self.perf.push(PerfSample {
            model_ms: t,
            wall_ns,
            workers: self.workers,
            spikes,
        });
        if let Some(dca) = &mut self.dca {
            let observed = wall_ns as f64 / 1e6 + self.config.injected_at(t) / self.workers as f64;
            let workers = self.workers;
            let decision = dca.observe(observed)?;
            self.dca_trace.push(DcaTraceRow {
                model_ms: t,
                wall_ms: observed,
                workers,
                decision,
            });
            self.workers = dca.current().min(self.pool_size);
        }
        self.t += 1;
        Ok(())
    }

    /// One integration step over every neuron group.
    fn step(&mut self) -> Result<(), KernelError> {
        let check = self.config.check_barriers;
        let (arrivals, g_exc, g_inh) = self.drive.kernel_parts();
        for group in &self.neuron_groups {
            let range = group.range.start as usize..group.range.end as usize;
            let ctx = StepCtx {
                params: group.params,
                integrator: self.config.integrator,
                dt: self.dt,
                mode: self.mode,
                coba: self.config.coba,
                decay: self.decay,
                generation: check.then_some(self.generation),
            };
            let len = range.len();
            let size = chunk_size(len, self.workers, self.config.chunk_min);
            let chunks = Chunk::split(
                group.range.start,
                size,
                &mut self.v[range.clone()],
                &mut self.u[range.clone()],
                &arrivals[range.clone()],
                &mut g_exc[range.clone()],
                &mut g_inh[range.clone()],
                &mut self.generations[range],
            );
            let n_chunks = len.div_ceil(size);
            let tasks = self.workers.min(n_chunks);
            if tasks <= 1 {
                let out = &mut self.staging[0];
                chunks.for_each(|c| update_chunk(&ctx, c, out));
                continue;
            }
            let mut buckets: Vec<(Vec<Chunk<'_>>, &mut Vec<NeuronId>)> =
                self.staging[..tasks].iter_mut().map(|out| (Vec::new(), out)).collect();
            for (k, chunk) in chunks.enumerate() {
                buckets[k % tasks].0.push(chunk);
            }
            self.executor.for_each(buckets, |(bucket, out)| {
                for chunk in bucket {
                    update_chunk(&ctx, chunk, out);
                }
            });
        }
        if check {
            let expected = self.generation + 1;
            for group in &self.neuron_groups {
                let r = group.range.start as usize..group.range.end as usize;
                if let Some(k) = self.generations[r.clone()].iter().position(|&g| g != expected) {
                    return Err(KernelError::Barrier {
                        step: self.generation,
                        detail: format!(
                            "neuron {} at generation {}, expected {expected}",
                            r.start + k,
                            self.generations[r.start + k]
                        ),
                    });
                }
            }
        }
        self.generation += 1;
        Ok(())
    }

    /// Runs `duration_ms` more ms and returns everything recorded since the
    /// last reset or run.
    pub fn run(&mut self, duration_ms: u64) -> Result<SimResult, KernelError> {
        let start_ms = self.t;
        let started = Instant::now();
        for _ in 0..duration_ms {
            self.advance_ms()?;
        }
        let execution_s = started.elapsed().as_secs_f64();
        let monitor = std::mem::replace(&mut self.monitor, SpikeMonitor::with_cap(self.config.record_cap));
        let group_spikes = self
            .neuron_groups
            .iter()
            .map(|g| GroupSpikes {
                name: self.names[g.index].clone(),
                count: std::mem::take(&mut self.group_counts[g.index]),
            })
            .collect();
        Ok(SimResult {
            model_ms: self.t - start_ms,
            total_spikes: std::mem::take(&mut self.total_spikes),
            group_spikes,
            raster: monitor.into_raster()?,
            perf: std::mem::take(&mut self.perf),
            dca_trace: std::mem::take(&mut self.dca_trace),
            execution_s,
        })
    }
}

/// Neurons per chunk: about four chunks per worker, never fewer than
/// `min` neurons.
pub fn chunk_size(len: usize, workers: usize, min: usize) -> usize {
    (len / (4 * workers.max(1))).max(min).max(1)
}

/// Builds a simulator, runs the untimed warmup, then `duration_ms`.
pub fn run(network: &Network, duration_ms: u64, warmup_ms: u64, config: KernelConfig) -> Result<SimResult, KernelError> {
    let mut sim = Simulator::new(network, config)?;
    sim.warmup(warmup_ms)?;
    sim.run(duration_ms)
}
