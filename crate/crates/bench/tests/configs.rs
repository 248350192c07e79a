use std::path::PathBuf;

use snn_bench::{ModelKind, RunSpec};
use snn_core::models::{ChainfireConfig, SynfireConfig};

fn load(name: &str) -> RunSpec {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    let spec = RunSpec::from_path(&path).unwrap();
    spec.validate().unwrap();
    spec
}

#[test]
fn chainfire_config_is_the_default_sweep() {
    let spec = load("chainfire.json");
    assert_eq!(spec.model, ModelKind::Chainfire);
    assert_eq!(spec.chainfire, ChainfireConfig::default());
    assert_eq!(spec.threads, [1, 2, 4, 8]);
    assert_eq!(spec.duration_ms, 10_000);
    assert!(!spec.dca);
}

#[test]
fn synfire_config_carries_the_calibrated_weight() {
    let spec = load("synfire.json");
    assert_eq!(spec.model, ModelKind::Synfire);
    assert_eq!(spec.synfire, SynfireConfig::default());
    assert_eq!(spec.synfire.w_ee, 1.25);
    assert_eq!(spec.threads, [1, 2, 4, 8]);
}

#[test]
fn dca_config_starts_at_max_workers() {
    let spec = load("dca_chainfire.json");
    assert!(spec.dca);
    assert_eq!(spec.chainfire, ChainfireConfig::default());
    assert_eq!(spec.threads, [spec.kernel.dca.max_workers]);
}
