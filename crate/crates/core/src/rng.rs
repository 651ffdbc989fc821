//! Seeded, splittable random number generation.
//!
//! Every stochastic operation in the crate takes its generator explicitly.
//! Parallel Monte Carlo gives each worker its own stream via [`SimRng::split`].

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// The single generator type used throughout the crate.
///
/// A `SimRng` is identified by a `(seed, stream)` pair. Streams derived from
/// the same seed are statistically independent ChaCha streams, so splitting
/// never correlates workers.
#[derive(Clone, Debug)]
pub struct SimRng {
    seed: u64,
    stream: u64,
    inner: ChaCha12Rng,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha12Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    /// Independent child generator for worker or trajectory `index`.
    ///
    /// The child depends only on `(seed, index)`, not on how much of the parent
    /// stream has been consumed.
    pub fn split(&self, index: u64) -> Self {
        // Stream 0 is the root; children are offset by one.
        Self::with_stream(self.seed, index.wrapping_add(1))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }
}

/// Seed for one named task under a master seed, e.g. one repetition of one
/// Monte Carlo claim. FNV-1a over the label, then SplitMix64 finalisation.
pub fn derive_seed(master: u64, label: &str, index: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(splitmix64(master ^ h) ^ index)
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngCore for SimRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
