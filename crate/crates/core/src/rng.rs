//! Deterministic seeding.
//!
//! Batch drivers derive one generator per instance from `(seed, index)` so
//! results do not depend on how instances are scheduled across workers.
//! Monte Carlo integration uses a counter-based stream: sample `i` of a
//! stream is a pure function of `(key, i)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of instance `index` under the base `seed`.
pub fn instance_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

pub fn instance_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(instance_seed(seed, index))
}

/// Counter-based generator of uniform variates in `[0, 1)`.
#[derive(Debug, Clone, Copy)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(key: u64) -> Self {
        Self { key: mix64(key) }
    }

    /// Raw 64-bit output for counter value `counter`.
    #[inline]
    pub fn bits(&self, counter: u64) -> u64 {
        mix64(self.key ^ mix64(counter.wrapping_mul(GOLDEN_GAMMA)))
    }

    /// Uniform variate in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&self, counter: u64) -> f64 {
        (self.bits(counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counter_stream_is_pure() {
        let a = CounterRng::new(7);
        let b = CounterRng::new(7);
        for i in 0..100 {
            assert_eq!(a.bits(i), b.bits(i));
            let u = a.uniform(i);
            assert!((0.0..1.0).contains(&u));
        }
        assert_ne!(CounterRng::new(8).bits(0), a.bits(0));
    }

    #[test]
    fn uniform_mean_is_half() {
        let g = CounterRng::new(42);
        let n = 1 << 16;
        let mean: f64 = (0..n).map(|i| g.uniform(i)).sum::<f64>() / n as f64;
        // standard error is 1/sqrt(12 n) ~ 1.1e-3
        assert!((mean - 0.5).abs() < 5e-3, "{mean}");
    }

    #[test]
    fn instance_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| instance_seed(42, i)).collect();
        assert_eq!(seeds.len(), 1000);
    }
}
