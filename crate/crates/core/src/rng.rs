//! Seeded random streams shared by sampling and significance testing.
//!
//! Every consumer draws from ChaCha8 keyed with the 64-bit seed written
//! little-endian into the first 8 key bytes (remaining 24 bytes zero). The
//! 64-bit ChaCha stream id selects an independent substream, so work that is
//! split across bins or iterations stays reproducible regardless of
//! scheduling. Bounded integers use rejection sampling on `next_u64` and
//! coin flips take the low bit of `next_u64`. Any port that implements
//! ChaCha8 with the same key layout reproduces the same draws.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Substream namespace for significance-test iterations.
pub(crate) const SIGNIFICANCE_STREAM_BASE: u64 = 1 << 40;

pub fn stream(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream_id);
    rng
}

/// Uniform integer in `0..bound`. `bound` must be positive.
pub fn below(rng: &mut impl RngCore, bound: u64) -> u64 {
    assert!(bound > 0, "bound must be positive");
    // Largest multiple of `bound` that fits; values above it are rejected.
    let zone = u64::MAX - (u64::MAX % bound);
    loop {
        let x = rng.next_u64();
        if x < zone {
            return x % bound;
        }
    }
}

pub fn coin(rng: &mut impl RngCore) -> bool {
    rng.next_u64() & 1 == 1
}

/// Seed for repetition `rep` of an experiment seeded with `seed`.
pub fn derive_seed(seed: u64, rep: u32) -> u64 {
    seed.wrapping_add(u64::from(rep))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let draw = |seed, id| {
            let mut rng = stream(seed, id);
            (0..4).map(|_| rng.next_u64()).collect::<Vec<_>>()
        };
        assert_eq!(draw(7, 0), draw(7, 0));
        assert_ne!(draw(7, 0), draw(7, 1));
        assert_ne!(draw(7, 0), draw(8, 0));
    }

    #[test]
    fn below_stays_in_range() {
        let mut rng = stream(1, 0);
        let mut seen = [0u32; 7];
        for _ in 0..7000 {
            seen[below(&mut rng, 7) as usize] += 1;
        }
        assert!(seen.iter().all(|&n| n > 800 && n < 1200), "{seen:?}");
    }
}
