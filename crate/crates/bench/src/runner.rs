//! Sweeps, DCA runs and output files.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use snn_core::dca::{worker_ms_integral, DcaTraceRow};
use snn_core::monitor::{performance_gain, write_perf_csv, write_raster_csv, BenchMetrics, PerfSample, SpikeRecord};
use snn_core::{KernelConfig, Network, SimResult, Simulator};

use crate::report::{write_json, BenchReport, MachineInfo, ReportRow};
use crate::spec::{group_bands, GroupBand, RunSpec};
use crate::BenchError;

pub struct SweepOutcome {
    pub report: BenchReport,
    /// Raster shared by every entry.
    pub raster: Vec<SpikeRecord>,
    /// Per-ms trace of the first entry.
    pub perf: Vec<PerfSample>,
    pub bands: Vec<GroupBand>,
}

fn model_name(spec: &RunSpec) -> String {
    serde_json::to_value(spec.model)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn timed_run(spec: &RunSpec, kernel: KernelConfig) -> Result<(Network, f64, SimResult), BenchError> {
    let started = Instant::now();
    let net = spec.build_network()?;
    let build_s = started.elapsed().as_secs_f64();
    let result = {
        let mut sim = Simulator::new(&net, kernel)?;
        sim.warmup(spec.warmup_ms)?;
        sim.run(spec.duration_ms)?
    };
    Ok((net, build_s, result))
}

fn first_difference(a: &[SpikeRecord], b: &[SpikeRecord]) -> String {
    match a.iter().zip(b).position(|(x, y)| x != y) {
        Some(k) => format!("record {k}: {:?} vs {:?}", a[k], b[k]),
        None => format!("lengths {} vs {}", a.len(), b.len()),
    }
}

fn metrics(spec: &RunSpec, result: &SimResult) -> Result<BenchMetrics, BenchError> {
    // Zero-length runs still get a positive denominator.
    let exec = result.execution_s.max(1e-9);
    Ok(BenchMetrics::new(
        spec.duration_ms as f64 / 1000.0,
        exec,
        result.total_spikes,
    )?)
}

/// Runs every thread count of the sweep on a freshly built network and
/// fails if any raster differs from the first entry's.
pub fn run_sweep(spec: &RunSpec) -> Result<SweepOutcome, BenchError> {
    spec.validate()?;
    let mut rows: Vec<ReportRow> = Vec::new();
    let mut reference: Option<(usize, Vec<SpikeRecord>, Vec<PerfSample>)> = None;
    let mut bands = Vec::new();
    for &threads in &spec.threads {
        let (net, build_s, result) = timed_run(spec, spec.kernel_for(threads))?;
        let m = metrics(spec, &result)?;
        match &reference {
            None => {
                bands = group_bands(&net);
                reference = Some((threads, result.raster, result.perf));
            }
            Some((ref_threads, raster, _)) => {
                if *raster != result.raster {
                    return Err(BenchError::RasterMismatch {
                        threads,
                        reference: *ref_threads,
                        detail: first_difference(raster, &result.raster),
                    });
                }
            }
        }
        rows.push(ReportRow {
            threads,
            baseline: false,
            build_s,
            metrics: m,
        });
    }
    let base = rows.iter().position(|r| r.threads == 1).unwrap_or(0);
    rows[base].baseline = true;
    let base_speed = rows[base].metrics.speed_factor;
    for (k, r) in rows.iter_mut().enumerate() {
        r.metrics.performance_gain = if k == base {
            None
        } else {
            Some(performance_gain(r.metrics.speed_factor, base_speed)?)
        };
    }
    let (_, raster, perf) = reference.expect("sweep is non-empty");
    Ok(SweepOutcome {
        report: BenchReport {
            model: model_name(spec),
            duration_ms: spec.duration_ms,
            warmup_ms: spec.warmup_ms,
            machine: MachineInfo::detect(),
            rows,
        },
        raster,
        perf,
        bands,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcaSummary {
    pub budget_ms: f64,
    pub initial_workers: usize,
    pub final_workers: usize,
    pub min_workers: usize,
    pub max_workers: usize,
    pub grows: usize,
    pub shrinks: usize,
    /// Fraction of ms whose observed wall time met the budget.
    pub realtime_compliance: f64,
    pub worker_ms: u64,
    /// Worker-ms of the same run at a fixed `max_workers`.
    pub fixed_max_worker_ms: u64,
    pub energy_ratio: f64,
    pub total_spikes: u64,
}

pub struct DcaOutcome {
    pub report: BenchReport,
    pub summary: DcaSummary,
    pub trace: Vec<DcaTraceRow>,
    pub raster: Vec<SpikeRecord>,
    pub perf: Vec<PerfSample>,
    pub bands: Vec<GroupBand>,
}

/// One run under the controller, starting from the first sweep entry
/// clamped to the DCA bounds, plus a fixed-maximum run whose raster must
/// match.
pub fn run_dca(spec: &RunSpec) -> Result<DcaOutcome, BenchError> {
    spec.validate()?;
    let dca = spec.kernel.dca.clone();
    dca.validate().map_err(snn_core::KernelError::from)?;
    let initial = spec.threads[0].clamp(dca.min_workers, dca.max_workers);
    let kernel = KernelConfig {
        threads: initial,
        dca_enabled: true,
        ..spec.kernel.clone()
    };
    let (net, build_s, result) = timed_run(spec, kernel)?;
    let (_, _, fixed) = timed_run(spec, spec.kernel_for(dca.max_workers))?;
    if fixed.raster != result.raster {
        return Err(BenchError::RasterMismatch {
            threads: dca.max_workers,
            reference: initial,
            detail: first_difference(&result.raster, &fixed.raster),
        });
    }
    let trace = result.dca_trace.clone();
    let worker_ms = worker_ms_integral(&trace);
    let fixed_max_worker_ms = dca.max_workers as u64 * spec.duration_ms;
    let met = trace.iter().filter(|r| r.wall_ms <= dca.budget_ms).count();
    let summary = DcaSummary {
        budget_ms: dca.budget_ms,
        initial_workers: initial,
        final_workers: trace.last().map_or(initial, |r| r.workers),
        min_workers: dca.min_workers,
        max_workers: dca.max_workers,
        grows: trace.iter().filter(|r| r.decision == snn_core::Decision::Grow).count(),
        shrinks: trace.iter().filter(|r| r.decision == snn_core::Decision::Shrink).count(),
        realtime_compliance: if trace.is_empty() { 1.0 } else { met as f64 / trace.len() as f64 },
        worker_ms,
        fixed_max_worker_ms,
        energy_ratio: if fixed_max_worker_ms == 0 {
            1.0
        } else {
            worker_ms as f64 / fixed_max_worker_ms as f64
        },
        total_spikes: result.total_spikes,
    };
    let report = BenchReport {
        model: model_name(spec),
        duration_ms: spec.duration_ms,
        warmup_ms: spec.warmup_ms,
        machine: MachineInfo::detect(),
        rows: vec![ReportRow {
            threads: initial,
            baseline: true,
            build_s,
            metrics: metrics(spec, &result)?,
        }],
    };
    Ok(DcaOutcome {
        report,
        summary,
        trace,
        raster: result.raster,
        perf: result.perf,
        bands: group_bands(&net),
    })
}

pub fn write_dca_trace_csv(trace: &[DcaTraceRow], path: &Path) -> Result<(), BenchError> {
    let file = File::create(path).map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let csv_err = |source| BenchError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(["model_ms", "wall_ms", "workers", "decision"]).map_err(csv_err)?;
    for r in trace {
        w.write_record([
            r.model_ms.to_string(),
            r.wall_ms.to_string(),
            r.workers.to_string(),
            r.decision.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Sidecar path for group bands: `raster.csv` gives `raster.groups.csv`.
pub fn bands_path(raster_path: &Path) -> PathBuf {
    let stem = raster_path.file_stem().and_then(|s| s.to_str()).unwrap_or("raster");
    raster_path.with_file_name(format!("{stem}.groups.csv"))
}

/// Writes the raster CSV and a sidecar with each group's id band, in
/// partition order. Returns the sidecar path.
pub fn export_raster_plotdata(raster: &[SpikeRecord], bands: &[GroupBand], path: &Path) -> Result<PathBuf, BenchError> {
    write_raster_csv(raster, path)?;
    let sidecar = bands_path(path);
    let file = File::create(&sidecar).map_err(|source| BenchError::Io {
        path: sidecar.clone(),
        source,
    })?;
    let csv_err = |source| BenchError::Csv {
        path: sidecar.clone(),
        source,
    };
    let mut sorted: Vec<&GroupBand> = bands.iter().collect();
    sorted.sort_by_key(|b| (b.partition, b.first_id));
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    for b in &sorted {
        w.serialize(b).map_err(csv_err)?;
    }
    if sorted.is_empty() {
        w.write_record(["name", "partition", "first_id", "last_id", "kind"]).map_err(csv_err)?;
    }
    w.flush().map_err(|source| BenchError::Io {
        path: sidecar.clone(),
        source,
    })?;
    Ok(sidecar)
}

fn ensure_dir(dir: &Path) -> Result<(), BenchError> {
    fs::create_dir_all(dir).map_err(|source| BenchError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

/// Writes report, raster with bands and the perf trace under `spec.out`.
pub fn write_sweep_outputs(spec: &RunSpec, out: &SweepOutcome) -> Result<Vec<PathBuf>, BenchError> {
    ensure_dir(&spec.out)?;
    let mut written = Vec::new();
    if spec.format.csv() {
        let p = spec.out.join("report.csv");
        out.report.write_csv(&p)?;
        written.push(p);
    }
    if spec.format.json() {
        let p = spec.out.join("report.json");
        out.report.write_json(&p)?;
        written.push(p);
    }
    if spec.write_traces {
        let raster = spec.out.join("raster.csv");
        written.push(export_raster_plotdata(&out.raster, &out.bands, &raster)?);
        written.push(raster);
        let perf = spec.out.join("perf.csv");
        write_perf_csv(&out.perf, &perf)?;
        written.push(perf);
    }
    Ok(written)
}

pub fn write_dca_outputs(spec: &RunSpec, out: &DcaOutcome) -> Result<Vec<PathBuf>, BenchError> {
    ensure_dir(&spec.out)?;
    let mut written = Vec::new();
    let trace = spec.out.join("dca_trace.csv");
    write_dca_trace_csv(&out.trace, &trace)?;
    written.push(trace);
    let summary = spec.out.join("dca_summary.json");
    write_json(&out.summary, &summary)?;
    written.push(summary);
    if spec.format.csv() {
        let p = spec.out.join("dca_report.csv");
        out.report.write_csv(&p)?;
        written.push(p);
    }
    if spec.format.json() {
        let p = spec.out.join("dca_report.json");
        out.report.write_json(&p)?;
        written.push(p);
    }
    if spec.write_traces {
        let raster = spec.out.join("dca_raster.csv");
        written.push(export_raster_plotdata(&out.raster, &out.bands, &raster)?);
        written.push(raster);
        let perf = spec.out.join("dca_perf.csv");
        write_perf_csv(&out.perf, &perf)?;
        written.push(perf);
    }
    Ok(written)
}
