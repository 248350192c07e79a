use proptest::prelude::*;
use snn_core::models::*;
use snn_core::*;

fn small_chainfire() -> Chainfire {
    build_chainfire(&ChainfireConfig {
        neurons_per_cluster: 100,
        ..ChainfireConfig::default()
    })
    .unwrap()
}

fn bits(sim: &Simulator<'_>) -> Vec<(u64, u64)> {
    let (v, u) = sim.state();
    v.iter().zip(u).map(|(v, u)| ((*v as f64).to_bits(), (*u as f64).to_bits())).collect()
}

fn run_with(net: &Network, ms: u64, cfg: KernelConfig) -> (SimResult, Vec<(u64, u64)>) {
    let mut sim = Simulator::new(net, cfg).unwrap();
    let r = sim.run(ms).unwrap();
    let b = bits(&sim);
    (r, b)
}

fn cfg(threads: usize) -> KernelConfig {
    KernelConfig {
        threads,
        chunk_min: 8,
        ..KernelConfig::default()
    }
}

#[test]
fn chainfire_identical_across_workers() {
    let cf = small_chainfire();
    let (base, base_state) = run_with(&cf.network, 2000, cfg(1));
    assert!(base.total_spikes > 0);
    for t in [2, 3, 4, 8] {
        let (r, state) = run_with(&cf.network, 2000, cfg(t));
        assert_eq!(r.raster, base.raster, "T={t}");
        assert_eq!(r.total_spikes, base.total_spikes);
        assert!(state == base_state, "state differs at T={t}");
    }
}

#[test]
fn synfire_identical_across_workers_and_modes() {
    for mode in [SynapseMode::Cuba, SynapseMode::Coba] {
        let s = build_synfire(&SynfireConfig::default()).unwrap();
        let mk = |t| KernelConfig {
            synapse_mode: Some(mode),
            ..cfg(t)
        };
        let (base, base_state) = run_with(&s.network, 400, mk(1));
        for t in [2, 4, 8] {
            let (r, state) = run_with(&s.network, 400, mk(t));
            assert_eq!(r.raster, base.raster, "{mode:?} T={t}");
            assert!(state == base_state, "{mode:?} T={t}");
        }
    }
}

#[test]
fn rk4_identical_across_workers() {
    let s = build_synfire(&SynfireConfig::default()).unwrap();
    let mk = |t| KernelConfig {
        integrator: Integrator::Rk4,
        steps_per_ms: 4,
        ..cfg(t)
    };
    let (base, _) = run_with(&s.network, 200, mk(1));
    let (r, _) = run_with(&s.network, 200, mk(4));
    assert_eq!(r.raster, base.raster);
}

#[test]
fn sequential_backend_matches_pool() {
    let s = build_synfire(&SynfireConfig::default()).unwrap();
    let (pool, _) = run_with(&s.network, 300, cfg(4));
    let (seq, _) = run_with(
        &s.network,
        300,
        KernelConfig {
            backend: Backend::Sequential,
            ..cfg(4)
        },
    );
    assert_eq!(pool.raster, seq.raster);
}

#[test]
fn changing_workers_every_ms_keeps_raster() {
    let s = build_synfire(&SynfireConfig::default()).unwrap();
    let (base, base_state) = run_with(&s.network, 300, cfg(1));
    let mut sim = Simulator::new(
        &s.network,
        KernelConfig {
            max_threads: Some(8),
            check_barriers: true,
            ..cfg(1)
        },
    )
    .unwrap();
    for ms in 0..300 {
        sim.set_worker_count(1 + ms % 8).unwrap();
        sim.advance_ms().unwrap();
    }
    assert!(bits(&sim) == base_state);
    let r = sim.run(0).unwrap();
    assert_eq!(r.raster, base.raster);
}

#[test]
fn dca_run_keeps_raster() {
    let cf = small_chainfire();
    let (base, _) = run_with(&cf.network, 1500, cfg(1));
    let dca = KernelConfig {
        threads: 4,
        dca_enabled: true,
        dca: DcaConfig {
            min_workers: 1,
            max_workers: 4,
            cooldown_ms: 10,
            window: 5,
            ..DcaConfig::default()
        },
        injected_load: vec![
            snn_core::kernel::LoadStep { from_ms: 0, extra_ms: 0.0 },
            snn_core::kernel::LoadStep { from_ms: 300, extra_ms: 5.0 },
            snn_core::kernel::LoadStep { from_ms: 800, extra_ms: 0.0 },
        ],
        ..cfg(4)
    };
    let (r, _) = run_with(&cf.network, 1500, dca);
    assert_eq!(r.raster, base.raster);
    let counts: std::collections::BTreeSet<_> = r.dca_trace.iter().map(|row| row.workers).collect();
    assert!(counts.len() > 1, "controller never changed workers");
}

#[test]
fn barrier_stress() {
    let s = build_synfire(&SynfireConfig::default()).unwrap();
    for threads in [2, 3, 5, 8] {
        let c = KernelConfig {
            threads,
            chunk_min: 1,
            check_barriers: true,
            ..KernelConfig::default()
        };
        let mut sim = Simulator::new(&s.network, c).unwrap();
        sim.run(200).unwrap();
    }
}

#[test]
fn warmup_then_reset_matches_fresh_run() {
    let cf = small_chainfire();
    let (fresh, fresh_state) = run_with(&cf.network, 1200, cfg(2));
    let mut sim = Simulator::new(&cf.network, cfg(2)).unwrap();
    sim.warmup(100).unwrap();
    let r = sim.run(1200).unwrap();
    assert_eq!(r.raster, fresh.raster);
    assert!(bits(&sim) == fresh_state);
}

#[test]
fn json_round_trip_simulates_identically() {
    let s = build_synfire(&SynfireConfig::default()).unwrap();
    let json = s.network.to_json().unwrap();
    let mut back = Network::from_json(&json).unwrap();
    back.freeze().ok();
    let (a, _) = run_with(&s.network, 200, cfg(1));
    let (b, _) = run_with(&back, 200, cfg(1));
    assert_eq!(a.raster, b.raster);
}

fn random_net(seed: u64, sizes: &[u32], p: f64, w: f64, inh_w: f64) -> Network {
    let mut net = Network::new(8, seed).unwrap();
    let gen = net
        .add_generator("gen", 20, GeneratorSpec::Poisson { rate_hz: 200.0, seed }, 0)
        .unwrap();
    let mut groups = Vec::new();
    for (k, &n) in sizes.iter().enumerate() {
        let part = k as u32;
        groups.push(
            net.add_group(&format!("e{k}"), n, IzhikevichParams::REGULAR_SPIKING, Polarity::Excitatory, part)
                .unwrap(),
        );
        groups.push(
            net.add_group(&format!("i{k}"), n / 2 + 1, IzhikevichParams::FAST_SPIKING, Polarity::Inhibitory, part)
                .unwrap(),
        );
    }
    for (k, &g) in groups.iter().enumerate() {
        net.connect(gen, g, ConnectPattern::Probabilistic(0.5), 6.0, 1).unwrap();
        for (j, &h) in groups.iter().enumerate() {
            let delay = 1 + ((k + j) % 8) as u16;
            let weight = if k % 2 == 0 { w } else { -inh_w };
            net.connect(g, h, ConnectPattern::Probabilistic(p), weight, delay).unwrap();
        }
    }
    net.freeze().unwrap();
    net
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn random_networks_are_worker_invariant(
        seed in 0u64..1000,
        sizes in prop::collection::vec(5u32..120, 1..4),
        p in 0.02f64..0.3,
        w in 0.1f64..4.0,
        inh_w in 0.1f64..4.0,
        coba in any::<bool>(),
        threads in 2usize..9,
    ) {
        let net = random_net(seed, &sizes, p, w, inh_w);
        let mode = if coba { SynapseMode::Coba } else { SynapseMode::Cuba };
        let mk = |t| KernelConfig { synapse_mode: Some(mode), chunk_min: 4, ..cfg(t) };
        let (base, base_state) = run_with(&net, 150, mk(1));
        let (r, state) = run_with(&net, 150, mk(threads));
        prop_assert_eq!(r.raster, base.raster);
        prop_assert!(state == base_state);
    }
}
