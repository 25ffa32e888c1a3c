//! Seeded, splittable random streams.
//!
//! Every logical role in an experiment (query sampler, oracle internals,
//! verification sampler, ...) draws from its own ChaCha stream derived from a
//! single master seed, so that experiments are reproducible bit-for-bit and
//! streams are independent within a round.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A master seed from which independent named streams are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedTree {
    seed: u64,
}

impl SeedTree {
    pub fn new(seed: u64) -> Self {
        SeedTree { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derive an independent generator for the given stream id.
    ///
    /// ChaCha exposes 2^64 independent streams per key; we key on the master
    /// seed and use the stream id to separate logical roles.
    pub fn stream(&self, id: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(id);
        rng
    }

    /// Derive a child tree (e.g. one per trial) that cannot collide with
    /// streams of this tree.
    pub fn child(&self, index: u64) -> SeedTree {
        // SplitMix64-style mixing keeps children well separated even for
        // adjacent indices.
        let mut z = self
            .seed
            .wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(index.wrapping_add(1)));
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        SeedTree {
            seed: z ^ (z >> 31),
        }
    }
}

/// Standard-normal sampler on a ChaCha stream (Box-Muller free: uses
/// `rand_distr`'s ziggurat via StandardNormal).
pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    use rand_distr::{Distribution, StandardNormal};
    let d: f64 = StandardNormal.sample(rng);
    d
}

/// Uniform u64 below `bound`.
pub fn uniform_below(rng: &mut ChaCha8Rng, bound: u64) -> u64 {
    // Lemire-style rejection-free enough for test scale; use simple modulo
    // rejection to stay unbiased.
    let zone = u64::MAX - (u64::MAX % bound);
    loop {
        let v = rng.next_u64();
        if v < zone {
            return v % bound;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_seed_identical_stream() {
        let a = SeedTree::new(7);
        let b = SeedTree::new(7);
        let mut ra = a.stream(3);
        let mut rb = b.stream(3);
        for _ in 0..100 {
            assert_eq!(ra.next_u64(), rb.next_u64());
        }
    }

    #[test]
    fn streams_differ() {
        let t = SeedTree::new(7);
        let mut r0 = t.stream(0);
        let mut r1 = t.stream(1);
        let same = (0..32).filter(|_| r0.next_u64() == r1.next_u64()).count();
        assert!(same < 2);
    }

    #[test]
    fn children_differ_from_parent_streams() {
        let t = SeedTree::new(42);
        let c0 = t.child(0);
        let c1 = t.child(1);
        assert_ne!(c0.seed(), c1.seed());
        assert_ne!(c0.seed(), t.seed());
    }
}
