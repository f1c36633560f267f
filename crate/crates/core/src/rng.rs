//! Deterministic pseudo-randomness.
//!
//! Every random decision in the toolkit (seek offsets, file sizes, payload
//! bytes, victim selection) comes from a [`SeededRng`]. The generator is
//! ChaCha8 (`rand_chacha::ChaCha8Rng`), keyed by expanding the 64-bit seed
//! with `SeedableRng::seed_from_u64`. ChaCha output is specified
//! byte-for-byte, so a seed reproduces the same sequence on every platform.
//!
//! Bounded draws use rejection sampling on raw 64-bit outputs, so they do
//! not depend on the distribution code of any particular `rand` release.
//!
//! Fan-out: [`SeededRng::stream`] selects one of 2^64 independent ChaCha
//! streams under the same key; [`SeededRng::split`] derives a child
//! generator keyed from the parent's next 256 bits.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Seed used by the fragmenter and the benchmarks when none is given.
pub const DEFAULT_SEED: SeedValue = SeedValue(137);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedValue(pub u64);

impl Default for SeedValue {
    fn default() -> Self {
        DEFAULT_SEED
    }
}

impl From<u64> for SeedValue {
    fn from(v: u64) -> Self {
        SeedValue(v)
    }
}

/// A reproducible random stream owned by one consumer.
#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: ChaCha8Rng,
}

pub fn make_rng(seed: SeedValue) -> SeededRng {
    SeededRng {
        inner: ChaCha8Rng::seed_from_u64(seed.0),
    }
}

impl SeededRng {
    /// Stream `id` of the generator keyed by `seed`. Stream 0 is the stream
    /// returned by [`make_rng`].
    pub fn stream(seed: SeedValue, id: u64) -> SeededRng {
        let mut inner = ChaCha8Rng::seed_from_u64(seed.0);
        inner.set_stream(id);
        SeededRng { inner }
    }

    /// Derives an independent child generator, advancing `self`.
    pub fn split(&mut self) -> SeededRng {
        let mut key = [0u8; 32];
        self.inner.fill_bytes(&mut key);
        SeededRng {
            inner: ChaCha8Rng::from_seed(key),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    /// Uniform draw from `0..bound`. `bound` must be nonzero.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "below(0)");
        if bound.is_power_of_two() {
            return self.next_u64() & (bound - 1);
        }
        // Reject the top partial copy of [0, bound) in the u64 range.
        let zone = u64::MAX - (u64::MAX % bound) - 1;
        loop {
            let v = self.next_u64();
            if v <= zone {
                return v % bound;
            }
        }
    }

    /// Uniform draw from `lo..=hi`.
    pub fn range_inclusive(&mut self, lo: u64, hi: u64) -> u64 {
        assert!(lo <= hi, "empty range {lo}..={hi}");
        match (hi - lo).checked_add(1) {
            Some(span) => lo + self.below(span),
            None => self.next_u64(),
        }
    }

    /// Uniform signed draw from `-half..half` (half-open).
    pub fn signed_below(&mut self, half: u64) -> i128 {
        if half == 0 {
            return 0;
        }
        let span = u128::from(half) * 2;
        let v = if span > u128::from(u64::MAX) {
            // half > 2^63: draw 65 bits by rejection.
            loop {
                let hi = u128::from(self.next_u64() & 1);
                let v = (hi << 64) | u128::from(self.next_u64());
                if v < span {
                    break v;
                }
            }
        } else {
            u128::from(self.below(span as u64))
        };
        v as i128 - i128::from(half)
    }

    pub fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest);
    }

    pub fn next_byte(&mut self) -> u8 {
        (self.next_u32() & 0xff) as u8
    }
}
