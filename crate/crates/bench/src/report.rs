//! Sweep reports: a rounded CSV table and a raw JSON mirror.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use snn_core::monitor::{round1, BenchMetrics};

use crate::BenchError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineInfo {
    pub logical_cores: usize,
    pub physical_cores: usize,
    pub os: String,
    pub arch: String,
    /// Whether the kernel was built with the worker pool.
    pub parallel_backend: bool,
}

impl MachineInfo {
    pub fn detect() -> Self {
        Self {
            logical_cores: num_cpus::get(),
            physical_cores: num_cpus::get_physical(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            parallel_backend: snn_core::Backend::default() == snn_core::Backend::Rayon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub threads: usize,
    pub baseline: bool,
    /// Network construction time, not part of `execution_s`.
    pub build_s: f64,
    #[serde(flatten)]
    pub metrics: BenchMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub model: String,
    pub duration_ms: u64,
    pub warmup_ms: u64,
    pub machine: MachineInfo,
    pub rows: Vec<ReportRow>,
}

#[derive(Serialize)]
struct CsvRow {
    threads: usize,
    execution_s: String,
    speed_factor: String,
    performance_gain: String,
    total_spikes: u64,
}

impl BenchReport {
    pub fn write_csv(&self, path: &Path) -> Result<(), BenchError> {
        let io = |source| BenchError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path).map_err(io)?));
        let csv_err = |source| BenchError::Csv {
            path: path.to_path_buf(),
            source,
        };
        for r in &self.rows {
            w.serialize(CsvRow {
                threads: r.threads,
                execution_s: format!("{:.2}", r.metrics.t_execution_s),
                speed_factor: format!("{:.1}", round1(r.metrics.speed_factor)),
                performance_gain: r
                    .metrics
                    .performance_gain
                    .map_or(String::new(), |g| format!("{:.1}", round1(g))),
                total_spikes: r.metrics.total_spikes,
            })
            .map_err(csv_err)?;
        }
        if self.rows.is_empty() {
            w.write_record(["threads", "execution_s", "speed_factor", "performance_gain", "total_spikes"])
                .map_err(csv_err)?;
        }
        w.flush().map_err(io)?;
        Ok(())
    }

    pub fn write_json(&self, path: &Path) -> Result<(), BenchError> {
        write_json(self, path)
    }
}

pub(crate) fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), BenchError> {
    let io = |source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| BenchError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    w.write_all(b"\n").map_err(io)?;
    w.flush().map_err(io)
}
