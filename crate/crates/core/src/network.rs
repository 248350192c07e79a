//! Network builder: neuron and generator groups, partitions, synapses.
//!
//! Groups receive contiguous global ids in creation order and must be added
//! partition by partition, so every partition owns a dense id range. After
//! [`Network::freeze`] the topology is immutable and the connection table is
//! available to the kernel.

use std::io::{Read, Write};
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::generator::{make_generator, GeneratorSpec};
use crate::neuron::{IzhikevichParams, NeuronError, Real};
use crate::rng;
use crate::synapse::{ConnectionTable, Delay, NeuronId, Synapse, SynapseMode};

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("unknown group id {0}")]
    UnknownGroup(usize),
    #[error("delay {delay} ms outside 1..={max} ms")]
    DelayOutOfRange { delay: u32, max: Delay },
    #[error("weight {weight} has the wrong sign for {polarity:?} source group '{group}'")]
    SignViolation {
        group: String,
        polarity: Polarity,
        weight: Real,
    },
    #[error("weight {0} is not finite")]
    NonFiniteWeight(Real),
    #[error("network is frozen")]
    Frozen,
    #[error("network must be frozen first")]
    NotFrozen,
    #[error("group '{name}' in partition {partition} added after partition {last}; partitions must be added in order without gaps")]
    PartitionOrder { name: String, partition: u32, last: u32 },
    #[error("group '{0}' must have at least one unit")]
    EmptyGroup(String),
    #[error("generator group '{0}' cannot be a synapse target")]
    GeneratorTarget(String),
    #[error("connection probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("one-to-one needs equal sizes, got {pre} and {post}")]
    SizeMismatch { pre: u32, post: u32 },
    #[error("explicit pair ({pre}, {post}) outside the group sizes")]
    PairOutOfRange { pre: u32, post: u32 },
    #[error("synapse references unit {0} outside the network")]
    UnitOutOfRange(NeuronId),
    #[error("max_delay must be at least 1 ms")]
    ZeroMaxDelay,
    #[error("network exceeds the u32 id space")]
    IdOverflow,
    #[error("duplicate group name '{0}'")]
    DuplicateName(String),
    #[error("invalid neuron parameters for '{group}': {source}")]
    Neuron { group: String, source: NeuronError },
    #[error("invalid generator '{group}': {reason}")]
    Generator { group: String, reason: String },
    #[error("network json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Excitatory,
    Inhibitory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GroupKind {
    Izhikevich { params: IzhikevichParams },
    Generator { spec: GeneratorSpec },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupId(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub name: String,
    pub size: u32,
    pub partition: u32,
    pub polarity: Polarity,
    pub kind: GroupKind,
    /// First global id.
    pub start: NeuronId,
}

impl Group {
    pub fn range(&self) -> Range<NeuronId> {
        self.start..self.start + self.size
    }

    pub fn is_generator(&self) -> bool {
        matches!(self.kind, GroupKind::Generator { .. })
    }

    pub fn params(&self) -> Option<&IzhikevichParams> {
        match &self.kind {
            GroupKind::Izhikevich { params } => Some(params),
            GroupKind::Generator { .. } => None,
        }
    }
}

/// A scheduling unit: a run of consecutive groups with a dense id range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub id: u32,
    pub groups: Vec<GroupId>,
    pub range: Range<NeuronId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectPattern {
    Full,
    OneToOne,
    /// Bernoulli draw per (pre, post) pair from the network's keyed generator.
    Probabilistic(f64),
    /// Local (pre, post) index pairs.
    Explicit(Vec<(u32, u32)>),
}

#[derive(Debug, Clone)]
struct Frozen {
    table: ConnectionTable,
    partitions: Vec<Partition>,
}

#[derive(Debug, Clone)]
pub struct Network {
    groups: Vec<Group>,
    synapses: Vec<Synapse>,
    max_delay: Delay,
    seed: u64,
    synapse_mode: SynapseMode,
    projections: u64,
    frozen: Option<Frozen>,
}

impl Network {
    pub fn new(max_delay: Delay, seed: u64) -> Result<Self, NetworkError> {
        if max_delay == 0 {
            return Err(NetworkError::ZeroMaxDelay);
        }
        Ok(Self {
            groups: Vec::new(),
            synapses: Vec::new(),
            max_delay,
            seed,
            synapse_mode: SynapseMode::Cuba,
            projections: 0,
            frozen: None,
        })
    }

    /// Synapse mode the model was designed for. Kernel configs may override it.
    pub fn synapse_mode(&self) -> SynapseMode {
        self.synapse_mode
    }

    pub fn set_synapse_mode(&mut self, mode: SynapseMode) {
        self.synapse_mode = mode;
    }

    pub fn max_delay(&self) -> Delay {
        self.max_delay
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn add_group(
        &mut self,
        name: &str,
        size: u32,
        params: IzhikevichParams,
        polarity: Polarity,
        partition: u32,
    ) -> Result<GroupId, NetworkError> {
        params.validate().map_err(|source| NetworkError::Neuron {
            group: name.to_string(),
            source,
        })?;
        self.push_group(name, size, partition, polarity, GroupKind::Izhikevich { params })
    }

    pub fn add_generator(
        &mut self,
        name: &str,
        size: u32,
        spec: GeneratorSpec,
        partition: u32,
    ) -> Result<GroupId, NetworkError> {
        spec.validate().map_err(|e| NetworkError::Generator {
            group: name.to_string(),
            reason: e.to_string(),
        })?;
        self.push_group(name, size, partition, Polarity::Excitatory, GroupKind::Generator { spec })
    }

    fn push_group(
        &mut self,
        name: &str,
        size: u32,
        partition: u32,
        polarity: Polarity,
        kind: GroupKind,
    ) -> Result<GroupId, NetworkError> {
        if self.frozen.is_some() {
            return Err(NetworkError::Frozen);
        }
        if size == 0 {
            return Err(NetworkError::EmptyGroup(name.to_string()));
        }
        if self.groups.iter().any(|g| g.name == name) {
            return Err(NetworkError::DuplicateName(name.to_string()));
        }
        let last = self.groups.last().map(|g| g.partition);
        let in_order = match last {
            None => partition == 0,
            Some(l) => partition == l || partition == l + 1,
        };
        if !in_order {
            return Err(NetworkError::PartitionOrder {
                name: name.to_string(),
                partition,
                last: last.unwrap_or(0),
            });
        }
        let start = self.units();
        start.checked_add(size).ok_or(NetworkError::IdOverflow)?;
        self.groups.push(Group {
            name: name.to_string(),
            size,
            partition,
            polarity,
            kind,
            start,
        });
        Ok(GroupId(self.groups.len() - 1))
    }

    /// Appends synapses from `pre` to `post` and returns how many were added.
    /// Synapses are generated pre-major, post-minor.
    pub fn connect(
        &mut self,
        pre: GroupId,
        post: GroupId,
        pattern: ConnectPattern,
        weight: Real,
        delay: Delay,
    ) -> Result<usize, NetworkError> {
        if self.frozen.is_some() {
            return Err(NetworkError::Frozen);
        }
        let (pre_g, post_g) = (self.group(pre)?.clone(), self.group(post)?.clone());
        if post_g.is_generator() {
            return Err(NetworkError::GeneratorTarget(post_g.name));
        }
        self.check_delay(delay as u32)?;
        check_weight(&pre_g, weight)?;

        let projection = self.projections;
        let before = self.synapses.len();
        let mut push = |i: u32, j: u32| {
            self.synapses.push(Synapse {
                pre: pre_g.start + i,
                post: post_g.start + j,
                weight,
                delay,
            })
        };
        match pattern {
            ConnectPattern::Full => {
                for i in 0..pre_g.size {
                    for j in 0..post_g.size {
                        push(i, j);
                    }
                }
            }
            ConnectPattern::OneToOne => {
                if pre_g.size != post_g.size {
                    return Err(NetworkError::SizeMismatch {
                        pre: pre_g.size,
                        post: post_g.size,
                    });
                }
                for i in 0..pre_g.size {
                    push(i, i);
                }
            }
            ConnectPattern::Probabilistic(p) => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(NetworkError::Probability(p));
                }
                let seed = self.seed;
                for i in 0..pre_g.size {
                    for j in 0..post_g.size {
                        let (a, b) = ((pre_g.start + i) as u64, (post_g.start + j) as u64);
                        if rng::uniform(seed, projection, a, b) < p {
                            push(i, j);
                        }
                    }
                }
            }
            ConnectPattern::Explicit(pairs) => {
                if let Some(&(i, j)) = pairs.iter().find(|&&(i, j)| i >= pre_g.size || j >= post_g.size) {
                    return Err(NetworkError::PairOutOfRange { pre: i, post: j });
                }
                for (i, j) in pairs {
                    push(i, j);
                }
            }
        }
        self.projections += 1;
        Ok(self.synapses.len() - before)
    }

    fn check_delay(&self, delay: u32) -> Result<(), NetworkError> {
        if delay == 0 || delay > self.max_delay as u32 {
            return Err(NetworkError::DelayOutOfRange {
                delay,
                max: self.max_delay,
            });
        }
        Ok(())
    }

    /// Builds the connection table and partition map. Idempotent.
    pub fn freeze(&mut self) -> Result<(), NetworkError> {
        if self.frozen.is_some() {
            return Ok(());
        }
        let table = ConnectionTable::build(self.units() as usize, &self.synapses);
        let mut partitions: Vec<Partition> = Vec::new();
        for (idx, g) in self.groups.iter().enumerate() {
            match partitions.last_mut() {
                Some(p) if p.id == g.partition => {
                    p.groups.push(GroupId(idx));
                    p.range.end = g.start + g.size;
                }
                _ => partitions.push(Partition {
                    id: g.partition,
                    groups: vec![GroupId(idx)],
                    range: g.range(),
                }),
            }
        }
        self.frozen = Some(Frozen { table, partitions });
        Ok(())
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen.is_some()
    }

    pub fn table(&self) -> Result<&ConnectionTable, NetworkError> {
        self.frozen.as_ref().map(|f| &f.table).ok_or(NetworkError::NotFrozen)
    }

    pub fn partitions(&self) -> Result<&[Partition], NetworkError> {
        self.frozen
            .as_ref()
            .map(|f| f.partitions.as_slice())
            .ok_or(NetworkError::NotFrozen)
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn group(&self, id: GroupId) -> Result<&Group, NetworkError> {
        self.groups.get(id.0).ok_or(NetworkError::UnknownGroup(id.0))
    }

    pub fn group_by_name(&self, name: &str) -> Option<GroupId> {
        self.groups.iter().position(|g| g.name == name).map(GroupId)
    }

    /// Group owning global id `unit`.
    pub fn group_of(&self, unit: NeuronId) -> Option<GroupId> {
        let idx = self.groups.partition_point(|g| g.start + g.size <= unit);
        (idx < self.groups.len() && self.groups[idx].start <= unit).then_some(GroupId(idx))
    }

    pub fn synapses(&self) -> &[Synapse] {
        &self.synapses
    }

    /// Total id space: neurons plus generator units.
    pub fn units(&self) -> u32 {
        self.groups.last().map(|g| g.start + g.size).unwrap_or(0)
    }

    /// Izhikevich neurons only.
    pub fn neuron_count(&self) -> u32 {
        self.groups.iter().filter(|g| !g.is_generator()).map(|g| g.size).sum()
    }

    pub fn generator_units(&self) -> u32 {
        self.groups.iter().filter(|g| g.is_generator()).map(|g| g.size).sum()
    }

    pub fn to_json(&self) -> Result<String, NetworkError> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<(), NetworkError> {
        Ok(serde_json::to_writer_pretty(writer, &self.to_file())?)
    }

    pub fn from_json(json: &str) -> Result<Self, NetworkError> {
        Self::from_file(serde_json::from_str(json)?)
    }

    pub fn read_json<R: Read>(reader: R) -> Result<Self, NetworkError> {
        Self::from_file(serde_json::from_reader(reader)?)
    }

    fn to_file(&self) -> NetworkFile {
        NetworkFile {
            max_delay: self.max_delay,
            seed: self.seed,
            synapse_mode: self.synapse_mode,
            groups: self
                .groups
                .iter()
                .map(|g| GroupFile {
                    name: g.name.clone(),
                    size: g.size,
                    partition: g.partition,
                    polarity: g.polarity,
                    kind: g.kind.clone(),
                })
                .collect(),
            synapses: self.synapses.clone(),
        }
    }

    /// Rebuilds through the same validation as the builder. The result is
    /// not frozen.
    fn from_file(file: NetworkFile) -> Result<Self, NetworkError> {
        let mut net = Network::new(file.max_delay, file.seed)?;
        net.synapse_mode = file.synapse_mode;
        for g in file.groups {
            match g.kind {
                GroupKind::Izhikevich { params } => {
                    net.add_group(&g.name, g.size, params, g.polarity, g.partition)?;
                }
                GroupKind::Generator { spec } => {
                    net.add_generator(&g.name, g.size, spec, g.partition)?;
                }
            }
        }
        let units = net.units();
        for s in &file.synapses {
            if s.pre >= units || s.post >= units {
                return Err(NetworkError::UnitOutOfRange(s.pre.max(s.post)));
            }
            net.check_delay(s.delay as u32)?;
            let pre = &net.groups[net.group_of(s.pre).expect("in range").0];
            check_weight(pre, s.weight)?;
            let post = &net.groups[net.group_of(s.post).expect("in range").0];
            if post.is_generator() {
                return Err(NetworkError::GeneratorTarget(post.name.clone()));
            }
        }
        net.synapses = file.synapses;
        Ok(net)
    }
}

fn check_weight(pre: &Group, weight: Real) -> Result<(), NetworkError> {
    if !weight.is_finite() {
        return Err(NetworkError::NonFiniteWeight(weight));
    }
    let ok = match pre.polarity {
        Polarity::Excitatory => weight >= 0.0,
        Polarity::Inhibitory => weight <= 0.0,
    };
    if !ok {
        return Err(NetworkError::SignViolation {
            group: pre.name.clone(),
            polarity: pre.polarity,
            weight,
        });
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    max_delay: Delay,
    seed: u64,
    synapse_mode: SynapseMode,
    groups: Vec<GroupFile>,
    synapses: Vec<Synapse>,
}

#[derive(Serialize, Deserialize)]
struct GroupFile {
    name: String,
    size: u32,
    partition: u32,
    polarity: Polarity,
    #[serde(flatten)]
    kind: GroupKind,
}

/// Checks a generator group's spec and returns its source; used by the
/// kernel when instantiating stimulus.
pub(crate) fn stimulus_for(group: &Group) -> Option<crate::models::generator::StimulusSource> {
    match &group.kind {
        GroupKind::Generator { spec } => make_generator(spec.clone(), group.size).ok(),
        GroupKind::Izhikevich { .. } => None,
    }
}
