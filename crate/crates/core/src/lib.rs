//! Time-driven spiking network simulator with Izhikevich neurons, delayed
//! CUBA/COBA synapses, a data-parallel kernel and dynamic worker allocation.

pub mod dca;
pub mod kernel;
pub mod models;
pub mod monitor;
pub mod network;
pub mod neuron;
pub mod rng;
pub mod synapse;

pub use dca::{DcaConfig, DcaState, Decision};
pub use kernel::{run, Backend, KernelConfig, KernelError, SimResult, Simulator};
pub use monitor::{PerfSample, SpikeMonitor, SpikeRecord};
pub use network::{ConnectPattern, GroupId, Network, NetworkError, Polarity};
pub use neuron::{Integrator, IzhikevichParams, NeuronState, Real};
pub use synapse::{CobaParams, SynapseMode};
