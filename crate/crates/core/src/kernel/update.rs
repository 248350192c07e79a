//! Per-neuron state update: fan-in, integrate, threshold, write-back.

use crate::neuron::{apply_reset, Integrator, IzhikevichParams, NeuronState, Real};
use crate::synapse::{coba_current, CobaParams, DecayFactors, NeuronId, SynapseMode};

#[derive(Debug, Clone, Copy)]
pub(crate) struct StepCtx {
    pub params: IzhikevichParams,
    pub integrator: Integrator,
    pub dt: Real,
    pub mode: SynapseMode,
    pub coba: CobaParams,
    pub decay: DecayFactors,
    /// Global step counter the chunk's generation counters must match, when
    /// barrier checking is on.
    pub generation: Option<u64>,
}

/// A contiguous run of neurons owned by one worker for one step.
pub(crate) struct Chunk<'a> {
    pub first: NeuronId,
    pub v: &'a mut [Real],
    pub u: &'a mut [Real],
    pub arrivals: &'a [Real],
    pub g_exc: &'a mut [Real],
    pub g_inh: &'a mut [Real],
    pub generations: &'a mut [u64],
}

impl<'a> Chunk<'a> {
    /// Splits parallel slices into chunks of `size` neurons.
    #[allow(clippy::too_many_arguments)]
    pub fn split(
        first: NeuronId,
        size: usize,
        v: &'a mut [Real],
        u: &'a mut [Real],
        arrivals: &'a [Real],
        g_exc: &'a mut [Real],
        g_inh: &'a mut [Real],
        generations: &'a mut [u64],
    ) -> impl Iterator<Item = Chunk<'a>> {
        v.chunks_mut(size)
            .zip(u.chunks_mut(size))
            .zip(arrivals.chunks(size))
            .zip(g_exc.chunks_mut(size))
            .zip(g_inh.chunks_mut(size))
            .zip(generations.chunks_mut(size))
            .enumerate()
            .map(move |(k, (((((v, u), arrivals), g_exc), g_inh), generations))| Chunk {
                first: first + (k * size) as NeuronId,
                v,
                u,
                arrivals,
                g_exc,
                g_inh,
                generations,
            })
    }
}

/// Advances every neuron of the chunk by one integration step and appends
/// the ids of neurons that crossed threshold to `spikes`.
#[inline]
pub(crate) fn update_chunk(ctx: &StepCtx, chunk: Chunk<'_>, spikes: &mut Vec<NeuronId>) {
    let p = &ctx.params;
    let coba = ctx.mode == SynapseMode::Coba;
    for k in 0..chunk.v.len() {
        if let Some(g) = ctx.generation {
            assert_eq!(
                chunk.generations[k], g,
                "neuron {} updated out of step",
                chunk.first + k as NeuronId
            );
            chunk.generations[k] = g + 1;
        }
        let v = chunk.v[k];
        let i_syn = if coba {
            coba_current(chunk.g_exc[k], chunk.g_inh[k], v, &ctx.coba)
        } else {
            chunk.arrivals[k]
        };
        let integrated = ctx.integrator.step(&NeuronState::new(v, chunk.u[k]), p, i_syn, ctx.dt);
        let (next, spiked) = apply_reset(&integrated, p);
        if spiked {
            spikes.push(chunk.first + k as NeuronId);
        }
        if coba {
            chunk.g_exc[k] *= ctx.decay.exc;
            chunk.g_inh[k] *= ctx.decay.inh;
        }
        chunk.v[k] = next.v;
        chunk.u[k] = next.u;
    }
}
