//! Benchmark harness for the snn-core kernel: thread-count sweeps, DCA runs
//! and their reports.

pub mod report;
pub mod runner;
pub mod spec;

use std::path::PathBuf;

use thiserror::Error;

pub use report::{BenchReport, MachineInfo, ReportRow};
pub use runner::{export_raster_plotdata, run_dca, run_sweep, DcaOutcome, DcaSummary, SweepOutcome};
pub use spec::{Format, GroupBand, ModelKind, RunSpec};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid run spec: {0}")]
    Spec(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error(transparent)]
    Network(#[from] snn_core::NetworkError),
    #[error(transparent)]
    Model(#[from] snn_core::models::ModelError),
    #[error(transparent)]
    Kernel(#[from] snn_core::KernelError),
    #[error(transparent)]
    Metric(#[from] snn_core::monitor::MetricError),
    #[error(transparent)]
    Monitor(#[from] snn_core::monitor::MonitorError),
    #[error("raster at {threads} threads differs from the {reference}-thread run ({detail})")]
    RasterMismatch {
        threads: usize,
        reference: usize,
        detail: String,
    },
}
