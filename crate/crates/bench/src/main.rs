use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use snn_bench::runner::{write_dca_outputs, write_sweep_outputs};
use snn_bench::{run_dca, run_sweep, Format, ModelKind, RunSpec};
use snn_core::models::synfire::{calibrate, pick_calibrated};
use snn_core::{Integrator, SynapseMode};

/// Thread-count sweeps and DCA runs for the Synfire and Chainfire benchmarks.
#[derive(Parser, Debug)]
#[command(name = "snn-bench", version)]
struct Cli {
    #[command(flatten)]
    run: RunArgs,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Scan the Synfire E-to-E weight and write a run config with the pick.
    Calibrate {
        #[arg(long, default_value_t = 0.25)]
        grid_min: f64,
        #[arg(long, default_value_t = 4.0)]
        grid_max: f64,
        #[arg(long, default_value_t = 0.25)]
        grid_step: f64,
        /// Where to write the calibrated run config.
        #[arg(long)]
        write: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON run config; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// synfire, chainfire or from-file.
    #[arg(long, global = true)]
    model: Option<ModelKind>,
    /// Network JSON for --model from-file.
    #[arg(long, global = true)]
    network: Option<PathBuf>,
    #[arg(long, global = true)]
    duration_ms: Option<u64>,
    #[arg(long, global = true)]
    warmup_ms: Option<u64>,
    /// Comma-separated worker counts; more than one runs a sweep.
    #[arg(long, value_delimiter = ',', global = true)]
    threads: Option<Vec<usize>>,
    /// Run under dynamic core assignment instead of a sweep.
    #[arg(long, global = true)]
    dca: bool,
    #[arg(long, global = true)]
    steps_per_ms: Option<u32>,
    #[arg(long, global = true)]
    integrator: Option<Integrator>,
    #[arg(long, global = true)]
    synapse_mode: Option<SynapseMode>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// csv, json or both.
    #[arg(long, global = true)]
    format: Option<Format>,
    /// Write the built network as JSON to this path.
    #[arg(long, global = true)]
    export_network: Option<PathBuf>,
    /// Print the effective run config and exit.
    #[arg(long, global = true)]
    print_config: bool,
}

impl RunArgs {
    fn spec(&self) -> Result<RunSpec> {
        let mut spec = match &self.config {
            Some(path) => RunSpec::from_path(path)?,
            None => RunSpec::default(),
        };
        if let Some(m) = self.model {
            spec.model = m;
        }
        if let Some(p) = &self.network {
            spec.network_file = Some(p.clone());
            if self.model.is_none() {
                spec.model = ModelKind::FromFile;
            }
        }
        if let Some(d) = self.duration_ms {
            spec.duration_ms = d;
        }
        if let Some(w) = self.warmup_ms {
            spec.warmup_ms = w;
        }
        if let Some(t) = &self.threads {
            spec.threads = t.clone();
        }
        if self.dca {
            spec.dca = true;
        }
        if let Some(s) = self.steps_per_ms {
            spec.kernel.steps_per_ms = s;
        }
        if let Some(i) = self.integrator {
            spec.kernel.integrator = i;
        }
        if let Some(m) = self.synapse_mode {
            spec.kernel.synapse_mode = Some(m);
        }
        if let Some(s) = self.seed {
            spec.seed = Some(s);
        }
        if let Some(o) = &self.out {
            spec.out = o.clone();
        }
        if let Some(f) = self.format {
            spec.format = f;
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn run(args: &RunArgs) -> Result<()> {
    let spec = args.spec()?;
    if args.print_config {
        println!("{}", serde_json::to_string_pretty(&spec)?);
        return Ok(());
    }
    if let Some(path) = &args.export_network {
        let net = spec.build_network()?;
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        net.write_json(BufWriter::new(file))
            .with_context(|| format!("writing {}", path.display()))?;
        println!("network: {} neurons, {} generator units, {} synapses -> {}",
            net.neuron_count(), net.generator_units(), net.synapses().len(), path.display());
    }
    if spec.dca {
        let out = run_dca(&spec)?;
        let files = write_dca_outputs(&spec, &out)?;
        let s = &out.summary;
        println!(
            "dca: workers {}..={} start {} end {}, {} grows, {} shrinks, compliance {:.3}, worker-ms {} vs {} fixed ({:.1}%), spikes {}",
            s.min_workers, s.max_workers, s.initial_workers, s.final_workers, s.grows, s.shrinks,
            s.realtime_compliance, s.worker_ms, s.fixed_max_worker_ms, 100.0 * s.energy_ratio, s.total_spikes
        );
        for f in files {
            println!("wrote {}", f.display());
        }
    } else {
        let out = run_sweep(&spec)?;
        println!("threads  execution_s  speed_factor  performance_gain  total_spikes");
        for r in &out.report.rows {
            let m = &r.metrics;
            let gain = m.performance_gain.map_or(String::from("-"), |g| format!("{g:.1}"));
            println!("{:>7}  {:>11.2}  {:>12.1}  {:>16}  {:>12}", r.threads, m.t_execution_s, m.speed_factor, gain, m.total_spikes);
        }
        let mc = &out.report.machine;
        println!("machine: {} logical / {} physical cores", mc.logical_cores, mc.physical_cores);
        for f in write_sweep_outputs(&spec, &out)? {
            println!("wrote {}", f.display());
        }
    }
    Ok(())
}

fn calibrate_cmd(args: &RunArgs, min: f64, max: f64, step: f64, write: Option<&PathBuf>) -> Result<()> {
    if !(step > 0.0 && min > 0.0 && max >= min) {
        bail!("grid needs 0 < min <= max and step > 0");
    }
    let mut spec = args.spec()?;
    spec.model = ModelKind::Synfire;
    if let Some(seed) = spec.seed {
        spec.synfire.seed = seed;
    }
    let n = ((max - min) / step).round() as usize;
    let grid: Vec<f64> = (0..=n).map(|k| min + k as f64 * step).collect();
    let points = calibrate(&spec.synfire, &grid)?;
    for p in &points {
        let onsets: Vec<String> = p
            .first_lap
            .iter()
            .map(|a| format!("{}@{}:{}", a.name, a.onset_ms.map_or("-".into(), |t| t.to_string()), a.spikes))
            .collect();
        println!(
            "w_ee {:>6.3}  {}  returns {:>5}  max/neuron {:.2}  {}",
            p.w_ee,
            if p.accepted { "ok  " } else { "fail" },
            p.e0_returns,
            p.max_rate_per_wave,
            onsets.join(" ")
        );
    }
    let Some(w) = pick_calibrated(&points) else {
        bail!("no grid point produced a single self-sustaining wave");
    };
    println!("picked w_ee = {w}");
    spec.synfire.w_ee = w;
    if let Some(path) = write {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        serde_json::to_writer_pretty(BufWriter::new(file), &spec)
            .with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Some(Command::Calibrate {
            grid_min,
            grid_max,
            grid_step,
            write,
        }) => calibrate_cmd(&cli.run, *grid_min, *grid_max, *grid_step, write.as_ref()),
        None => run(&cli.run),
    }
}
