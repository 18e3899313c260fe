//! Deterministic random streams.
//!
//! Every random draw in the crate comes from SplitMix64 (Steele, Lea & Flood),
//! a counter-based generator: the state advances by the 64-bit golden-ratio
//! constant and each output is the state passed through a fixed finalizer.
//! Per-item streams are derived with [`mix`], so item `i` never depends on how
//! any other item was processed.

use rand_core::{RngCore, SeedableRng};
use rand_distr::Distribution;
use rand_xoshiro::SplitMix64;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Seed for item `index` of a run seeded with `seed`.
///
/// This is output number `index + 1` of a SplitMix64 stream started at
/// `seed`, computed in O(1): `finalize(seed + (index + 1) * GAMMA)`.
pub fn mix(seed: u64, index: u64) -> u64 {
    let state = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    let mut z = state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A seeded SplitMix64 stream with the float conversions used by the pipeline.
#[derive(Debug, Clone)]
pub struct Stream {
    inner: SplitMix64,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: SplitMix64::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)`: the top 53 bits scaled by 2^-53.
    pub fn next_unit(&mut self) -> f64 {
        unit_from_bits(self.next_u64())
    }

    /// Uniform in `[lo, hi)`; exactly `lo` when the interval has zero width.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_unit()
    }

    /// Gaussian draw via `rand_distr`'s ziggurat sampler on this stream.
    pub fn normal(&mut self, mean: f64, std_dev: f64) -> f64 {
        let z: f64 = rand_distr::StandardNormal.sample(&mut self.inner);
        mean + std_dev * z
    }

    /// Uniform index in `0..n` as `floor(unit * n)`. `n` must be nonzero.
    pub fn index(&mut self, n: usize) -> usize {
        index_from_bits(self.next_u64(), n)
    }
}

pub fn unit_from_bits(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn index_from_bits(bits: u64, n: usize) -> usize {
    let i = libm::floor(unit_from_bits(bits) * n as f64) as usize;
    i.min(n - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mix_matches_stream_output() {
        let mut s = Stream::new(42);
        for i in 0..5 {
            assert_eq!(mix(42, i), s.next_u64());
        }
    }

    #[test]
    fn zero_width_interval_is_exact() {
        let mut s = Stream::new(1);
        for _ in 0..100 {
            assert_eq!(s.uniform(0.25, 0.25), 0.25);
            let u = s.next_unit();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn index_stays_in_range() {
        assert_eq!(index_from_bits(u64::MAX, 7), 6);
        assert_eq!(index_from_bits(0, 7), 0);
    }
}
