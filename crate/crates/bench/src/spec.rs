//! Run specification: a JSON document plus command-line overrides.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use snn_core::models::{build_chainfire, build_synfire, ChainfireConfig, SynfireConfig};
use snn_core::network::GroupKind;
use snn_core::{KernelConfig, Network};

use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Synfire,
    Chainfire,
    /// Network JSON given by `network_file`.
    FromFile,
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "synfire" => Ok(ModelKind::Synfire),
            "chainfire" => Ok(ModelKind::Chainfire),
            "from-file" | "file" => Ok(ModelKind::FromFile),
            other => Err(format!("unknown model '{other}' (expected synfire, chainfire or from-file)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "both" => Ok(Format::Both),
            other => Err(format!("unknown format '{other}' (expected csv, json or both)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunSpec {
    pub model: ModelKind,
    pub network_file: Option<PathBuf>,
    pub synfire: SynfireConfig,
    pub chainfire: ChainfireConfig,
    pub duration_ms: u64,
    /// Untimed ms simulated and discarded before every timed run.
    pub warmup_ms: u64,
    pub kernel: KernelConfig,
    /// Worker counts of the sweep, run in order. Duplicates are run again.
    pub threads: Vec<usize>,
    pub dca: bool,
    /// Replaces the model's own seed when set.
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub format: Format,
    /// Write raster and perf traces next to the report.
    pub write_traces: bool,
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            model: ModelKind::Chainfire,
            network_file: None,
            synfire: SynfireConfig::default(),
            chainfire: ChainfireConfig::default(),
            duration_ms: 10_000,
            warmup_ms: 100,
            kernel: KernelConfig::default(),
            threads: vec![1],
            dca: false,
            seed: None,
            out: PathBuf::from("results"),
            format: Format::Both,
            write_traces: true,
        }
    }
}

/// Contiguous id range of one group, for plotting bands.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupBand {
    pub name: String,
    pub partition: u32,
    pub first_id: u32,
    pub last_id: u32,
    pub kind: String,
}

pub fn group_bands(network: &Network) -> Vec<GroupBand> {
    network
        .groups()
        .iter()
        .map(|g| GroupBand {
            name: g.name.clone(),
            partition: g.partition,
            first_id: g.start,
            last_id: g.start + g.size - 1,
            kind: match &g.kind {
                GroupKind::Izhikevich { .. } => "neuron".into(),
                GroupKind::Generator { .. } => "generator".into(),
            },
        })
        .collect()
}

impl RunSpec {
    pub fn from_path(path: &Path) -> Result<Self, BenchError> {
        let file = File::open(path).map_err(|source| BenchError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_reader(BufReader::new(file)).map_err(|source| BenchError::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.threads.is_empty() {
            return Err(BenchError::Spec("thread list is empty".into()));
        }
        if self.threads.contains(&0) {
            return Err(BenchError::Spec("thread counts must be at least 1".into()));
        }
        if self.model == ModelKind::FromFile && self.network_file.is_none() {
            return Err(BenchError::Spec("model from-file needs network_file".into()));
        }
        self.kernel_for(self.threads[0]).validate()?;
        Ok(())
    }

    /// Kernel config for one fixed-worker sweep entry.
    pub fn kernel_for(&self, threads: usize) -> KernelConfig {
        KernelConfig {
            threads,
            dca_enabled: false,
            ..self.kernel.clone()
        }
    }

    /// Builds the network. Every call with the same spec yields the same
    /// topology.
    pub fn build_network(&self) -> Result<Network, BenchError> {
        let net = match self.model {
            ModelKind::Synfire => {
                let mut c = self.synfire.clone();
                if let Some(seed) = self.seed {
                    c.seed = seed;
                }
                build_synfire(&c)?.network
            }
            ModelKind::Chainfire => {
                let mut c = self.chainfire.clone();
                if let Some(seed) = self.seed {
                    c.seed = seed;
                }
                build_chainfire(&c)?.network
            }
            ModelKind::FromFile => {
                let path = self.network_file.as_ref().expect("validated");
                let file = File::open(path).map_err(|source| BenchError::Io {
                    path: path.clone(),
                    source,
                })?;
                let mut net = Network::read_json(BufReader::new(file))?;
                if !net.is_frozen() {
                    net.freeze()?;
                }
                net
            }
        };
        Ok(net)
    }
}
