//! Stimulus generators and the benchmark network builders.

pub mod chainfire;
pub mod generator;
pub mod synfire;

pub use chainfire::{build_chainfire, Chainfire, ChainfireConfig};
pub use generator::{make_generator, GeneratorSpec, StimulusSource};
pub use synfire::{build_synfire, calibrate, Synfire, SynfireConfig};

use thiserror::Error;

use crate::network::NetworkError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("generator: {0}")]
    Generator(String),
    #[error("invalid model config: {0}")]
    Config(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
}
