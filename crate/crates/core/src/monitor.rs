//! Spike raster recording, per-ms performance samples and the benchmark
//! metrics derived from them.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::synapse::NeuronId;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("execution time must be positive, got {0} s")]
    ExecutionTime(f64),
    #[error("baseline speed factor must be positive, got {0}")]
    Baseline(f64),
    #[error("trace is empty")]
    EmptyTrace,
    #[error("budget must be positive, got {0} ms")]
    Budget(f64),
}

#[derive(Debug, Error)]
pub enum MonitorError {
    #[error("spike at ms {t} recorded after ms {current}")]
    OutOfOrder { t: u64, current: u64 },
    #[error("raster spill: {0}")]
    Io(#[from] io::Error),
    #[error("csv {path}: {source}")]
    Csv { path: String, source: csv::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SpikeRecord {
    #[serde(rename = "time_ms")]
    pub time: u64,
    #[serde(rename = "neuron_id")]
    pub neuron: NeuronId,
}

/// Records spikes in model-time order. Records within one ms are sorted by
/// neuron id when the ms closes. Above `cap` in-memory records the oldest
/// ones are spilled to an anonymous temp file.
#[derive(Debug)]
pub struct SpikeMonitor {
    records: Vec<SpikeRecord>,
    pending: Vec<SpikeRecord>,
    current: u64,
    cap: usize,
    spill: Option<BufWriter<File>>,
    spilled: usize,
}

pub const DEFAULT_RECORD_CAP: usize = 10_000_000;

impl Default for SpikeMonitor {
    fn default() -> Self {
        Self::with_cap(DEFAULT_RECORD_CAP)
    }
}

impl SpikeMonitor {
    pub fn with_cap(cap: usize) -> Self {
        Self {
            records: Vec::new(),
            pending: Vec::new(),
            current: 0,
            cap: cap.max(1),
            spill: None,
            spilled: 0,
        }
    }

    pub fn record_spike(&mut self, neuron: NeuronId, t: u64) -> Result<(), MonitorError> {
        if t < self.current {
            return Err(MonitorError::OutOfOrder { t, current: self.current });
        }
        if t > self.current {
            self.close_ms()?;
            self.current = t;
        }
        self.pending.push(SpikeRecord { time: t, neuron });
        Ok(())
    }

    fn close_ms(&mut self) -> Result<(), MonitorError> {
        self.pending.sort_unstable();
        self.records.append(&mut self.pending);
        if self.records.len() >= self.cap {
            let spill = match &mut self.spill {
                Some(s) => s,
                None => self.spill.insert(BufWriter::new(tempfile::tempfile()?)),
            };
            for r in &self.records {
                spill.write_all(&r.time.to_le_bytes())?;
                spill.write_all(&r.neuron.to_le_bytes())?;
            }
            self.spilled += self.records.len();
            self.records.clear();
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.spilled + self.records.len() + self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spilled(&self) -> usize {
        self.spilled
    }

    /// Sorted raster of everything recorded so far.
    pub fn into_raster(mut self) -> Result<Vec<SpikeRecord>, MonitorError> {
        self.close_ms()?;
        let mut out = Vec::with_capacity(self.len());
        if let Some(spill) = self.spill.take() {
            let mut file = spill.into_inner().map_err(|e| e.into_error())?;
            file.seek(SeekFrom::Start(0))?;
            let mut reader = BufReader::new(file);
            let mut buf = [0u8; 12];
            for _ in 0..self.spilled {
                reader.read_exact(&mut buf)?;
                out.push(SpikeRecord {
                    time: u64::from_le_bytes(buf[..8].try_into().expect("8 bytes")),
                    neuron: NeuronId::from_le_bytes(buf[8..].try_into().expect("4 bytes")),
                });
            }
        }
        out.append(&mut self.records);
        Ok(out)
    }
}

pub fn write_raster_csv(raster: &[SpikeRecord], path: &Path) -> Result<(), MonitorError> {
    let csv_err = |source| MonitorError::Csv {
        path: path.display().to_string(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    // Explicit header so an empty raster still gets one.
    w.write_record(["time_ms", "neuron_id"]).map_err(csv_err)?;
    for r in raster {
        w.write_record([r.time.to_string(), r.neuron.to_string()]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_raster_csv(path: &Path) -> Result<Vec<SpikeRecord>, MonitorError> {
    let csv_err = |source| MonitorError::Csv {
        path: path.display().to_string(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().collect::<Result<Vec<SpikeRecord>, _>>().map_err(csv_err)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerfSample {
    pub model_ms: u64,
    /// Monotonic wall time spent on this ms.
    pub wall_ns: u64,
    pub workers: usize,
    pub spikes: u32,
}

impl PerfSample {
    pub fn wall_ms(&self) -> f64 {
        self.wall_ns as f64 / 1e6
    }
}

pub fn write_perf_csv(trace: &[PerfSample], path: &Path) -> Result<(), MonitorError> {
    let csv_err = |source| MonitorError::Csv {
        path: path.display().to_string(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["model_ms", "wall_ns", "workers", "spikes"]).map_err(csv_err)?;
    for s in trace {
        w.write_record([
            s.model_ms.to_string(),
            s.wall_ns.to_string(),
            s.workers.to_string(),
            s.spikes.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// One benchmark run, JSON keys as emitted in metrics files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchMetrics {
    pub t_model_s: f64,
    pub t_execution_s: f64,
    pub speed_factor: f64,
    /// `None` for the baseline row.
    pub performance_gain: Option<f64>,
    pub total_spikes: u64,
}

impl BenchMetrics {
    pub fn new(t_model_s: f64, t_execution_s: f64, total_spikes: u64) -> Result<Self, MetricError> {
        Ok(Self {
            t_model_s,
            t_execution_s,
            speed_factor: speed_factor(t_model_s, t_execution_s)?,
            performance_gain: None,
            total_spikes,
        })
    }
}

/// `t_model / t_execution`; 1.0 is real time.
pub fn speed_factor(t_model_s: f64, t_execution_s: f64) -> Result<f64, MetricError> {
    if !(t_execution_s > 0.0) {
        return Err(MetricError::ExecutionTime(t_execution_s));
    }
    Ok(t_model_s / t_execution_s)
}

pub fn performance_gain(multi: f64, single: f64) -> Result<f64, MetricError> {
    if !(single > 0.0) {
        return Err(MetricError::Baseline(single));
    }
    Ok(multi / single)
}

/// Fraction of ms whose wall time is within `budget_ms`.
pub fn realtime_compliance(trace: &[PerfSample], budget_ms: f64) -> Result<f64, MetricError> {
    if trace.is_empty() {
        return Err(MetricError::EmptyTrace);
    }
    if !(budget_ms > 0.0) {
        return Err(MetricError::Budget(budget_ms));
    }
    let budget_ns = budget_ms * 1e6;
    let ok = trace.iter().filter(|s| s.wall_ns as f64 <= budget_ns).count();
    Ok(ok as f64 / trace.len() as f64)
}

/// One decimal, as factors are presented in reports.
pub fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}
