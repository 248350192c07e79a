//! Stimulus spike generators. Generator units have no dynamics; they emit
//! spikes on a schedule derived from their spec and seed only.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::rng;

const STREAM_PULSE: u64 = 0x5055_4c53;
const STREAM_POISSON: u64 = 0x504f_4953;
/// Jitter draws are clipped to this many sigma.
const MAX_SIGMAS: f64 = 6.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    /// Every unit fires at `start_ms + k * 1000 / rate_hz`.
    Periodic { rate_hz: f64, start_ms: u64 },
    /// Every unit fires once per packet, jittered around the packet time
    /// with a zero-mean normal of `sigma_ms`.
    PulsePacket {
        rate_hz: f64,
        start_ms: u64,
        sigma_ms: f64,
        seed: u64,
    },
    /// Independent Bernoulli(rate / 1 kHz) per unit and ms.
    Poisson { rate_hz: f64, seed: u64 },
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        let rate = match self {
            GeneratorSpec::Periodic { rate_hz, .. } => *rate_hz,
            GeneratorSpec::PulsePacket { rate_hz, sigma_ms, .. } => {
                if !(sigma_ms.is_finite() && *sigma_ms >= 0.0) {
                    return Err(ModelError::Generator(format!("sigma_ms must be >= 0, got {sigma_ms}")));
                }
                *rate_hz
            }
            GeneratorSpec::Poisson { rate_hz, .. } => *rate_hz,
        };
        if !(rate.is_finite() && rate > 0.0 && rate <= 1000.0) {
            return Err(ModelError::Generator(format!(
                "rate_hz must be in (0, 1000], got {rate}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StimulusSource {
    spec: GeneratorSpec,
    units: u32,
}

pub fn make_generator(spec: GeneratorSpec, units: u32) -> Result<StimulusSource, ModelError> {
    spec.validate()?;
    if units == 0 {
        return Err(ModelError::Generator("generator needs at least one unit".into()));
    }
    Ok(StimulusSource { spec, units })
}

impl StimulusSource {
    pub fn units(&self) -> u32 {
        self.units
    }

    pub fn spec(&self) -> &GeneratorSpec {
        &self.spec
    }

    /// Appends the local indices of units firing at ms `t`.
    pub fn spikes_at(&self, t: u64, out: &mut Vec<u32>) {
        match self.spec {
            GeneratorSpec::Periodic { rate_hz, start_ms } => {
                if periodic_fires(rate_hz, start_ms, t) {
                    out.extend(0..self.units);
                }
            }
            GeneratorSpec::PulsePacket {
                rate_hz,
                start_ms,
                sigma_ms,
                seed,
            } => {
                let period = 1000.0 / rate_hz;
                let reach = (MAX_SIGMAS * sigma_ms).ceil() + 1.0;
                let rel = t as f64 - start_ms as f64;
                let first = ((rel - reach) / period).floor().max(0.0) as u64;
                let last = ((rel + reach) / period).ceil();
                if last < 0.0 {
                    return;
                }
                for k in first..=last as u64 {
                    let centre = start_ms as f64 + k as f64 * period;
                    for unit in 0..self.units {
                        if packet_spike_time(seed, k, unit, centre, sigma_ms) == t {
                            out.push(unit);
                        }
                    }
                }
            }
            GeneratorSpec::Poisson { rate_hz, seed } => {
                let p = rate_hz / 1000.0;
                out.extend((0..self.units).filter(|&u| rng::uniform(seed, STREAM_POISSON, u as u64, t) < p));
            }
        }
    }
}

fn periodic_fires(rate_hz: f64, start_ms: u64, t: u64) -> bool {
    if t < start_ms {
        return false;
    }
    let period = 1000.0 / rate_hz;
    let k = ((t - start_ms) as f64 / period).round();
    (start_ms as f64 + k * period).round() as u64 == t
}

fn packet_spike_time(seed: u64, packet: u64, unit: u32, centre: f64, sigma_ms: f64) -> u64 {
    let jitter = if sigma_ms > 0.0 {
        let z: f64 = StandardNormal.sample(&mut rng::keyed_rng(seed, STREAM_PULSE, packet, unit as u64));
        sigma_ms * z.clamp(-MAX_SIGMAS, MAX_SIGMAS)
    } else {
        0.0
    };
    (centre + jitter).round().max(0.0) as u64
}
