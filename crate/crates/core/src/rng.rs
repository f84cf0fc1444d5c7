//! Counter-based random streams.
//!
//! Every trajectory draws from its own ChaCha8 stream. The key is derived from
//! `(master seed, experiment tag)` and the 64-bit ChaCha stream id is the trial
//! index, so a trial's randomness does not depend on which worker runs it or
//! in which order trials are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;

/// Identifier written into run manifests.
pub const RNG_CONSTRUCTION: &str =
    "ChaCha8(key=splitmix64(seed,tag), stream=trial index); normal=ziggurat(rand_distr::StandardNormal); exponential=ziggurat(rand_distr::Exp1)";

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Family of independent streams under one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamFamily {
    seed: u64,
    tag: u64,
}

impl StreamFamily {
    pub fn new(seed: u64) -> Self {
        StreamFamily { seed, tag: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Sub-family for a named purpose (e.g. one per sweep point).
    pub fn derive(&self, tag: u64) -> Self {
        StreamFamily {
            seed: self.seed,
            tag: splitmix64(self.tag ^ splitmix64(tag.wrapping_add(1))),
        }
    }

    /// Stream for one trial.
    pub fn stream(&self, index: u64) -> StreamRng {
        let k0 = splitmix64(self.seed);
        let k1 = splitmix64(k0 ^ self.tag);
        let k2 = splitmix64(k1);
        let k3 = splitmix64(k2 ^ 0x5EED);
        let mut key = [0u8; 32];
        for (chunk, k) in key.chunks_exact_mut(8).zip([k0, k1, k2, k3]) {
            chunk.copy_from_slice(&k.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(index);
        rng
    }
}

#[inline]
pub fn std_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Exponential draw with the given rate.
#[inline]
pub fn exponential<R: rand::Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    let e: f64 = Exp1.sample(rng);
    e / rate
}

const CHUNK: usize = 256;

/// Maps every trial index through `f` in parallel, preserving index order.
pub fn par_map_trials<T, F>(trials: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..trials as u64).into_par_iter().map(f).collect()
}

/// Parallel reduction over trials with a fixed chunk layout.
///
/// Chunks are folded independently and merged left to right, so the floating
/// point summation order depends only on `trials`, never on the thread count.
pub fn par_fold_trials<A, I, F, M>(trials: usize, init: I, fold: F, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(&mut A, u64) + Sync + Send,
    M: Fn(&mut A, A),
{
    let n_chunks = trials.div_ceil(CHUNK);
    let partials: Vec<A> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut acc = init();
            let lo = chunk * CHUNK;
            let hi = (lo + CHUNK).min(trials);
            for i in lo..hi {
                fold(&mut acc, i as u64);
            }
            acc
        })
        .collect();
    let mut total = init();
    for part in partials {
        merge(&mut total, part);
    }
    total
}
