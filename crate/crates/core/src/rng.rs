//! Reproducible random number streams.
//!
//! A [`RngStream`] is an exclusive-use value: one stream per logical thread
//! of execution, never shared. Parallel replication derives one stream per
//! replicate from a base seed and the replicate index, so reports are
//! bit-identical regardless of scheduling.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::special::std_normal_quantile;

/// SplitMix64 finalizer; mixes a base seed with a counter into a
/// well-distributed derived seed.
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-based pseudo-random stream (ChaCha12). Identical seed and call
/// sequence give a bit-identical output stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha12Rng,
    seed: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha12Rng::seed_from_u64(seed), seed }
    }

    /// Derived seed for replicate `index` of a run seeded with `base_seed`.
    pub fn split_seed(base_seed: u64, index: u64) -> u64 {
        splitmix64(base_seed.wrapping_add(splitmix64(index)))
    }

    /// Stream for replicate `index`, independent of this stream's state.
    pub fn split(base_seed: u64, index: u64) -> Self {
        Self::new(Self::split_seed(base_seed, index))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on (0, 1) (both endpoints excluded so quantile transforms
    /// stay finite).
    pub fn uniform(&mut self) -> f64 {
        loop {
            let u = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            if u > 0.0 {
                return u;
            }
        }
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal via the inverse-CDF transform.
    pub fn normal(&mut self) -> f64 {
        std_normal_quantile(self.uniform())
    }

    pub fn uniform_usize(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}
