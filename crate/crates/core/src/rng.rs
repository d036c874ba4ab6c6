//! Seed derivation and per-stream generators.
//!
//! Every stochastic routine takes an explicit `u64` seed. Independent
//! sub-streams (ensemble rows, phase-diagram trials, frames) are derived by
//! hashing the master seed with the stream coordinates, so any single draw can
//! be regenerated without replaying the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator type used throughout the crate.
pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combines a seed with a list of coordinates into a new, well-mixed seed.
pub fn derive_seed(seed: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(splitmix64(seed), |acc, &c| splitmix64(acc ^ splitmix64(c)))
}

/// A generator seeded from `seed` and positioned on ChaCha stream `stream`.
///
/// Counter-based: the output of stream `i` does not depend on how many values
/// were consumed from any other stream.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A generator for an arbitrary coordinate tuple under `seed`.
pub fn rng_for(seed: u64, coords: &[u64]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, coords))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut r1 = stream_rng(7, 3);
        let mut r2 = stream_rng(7, 3);
        let mut r3 = stream_rng(7, 4);
        let x1: u64 = r1.random();
        let x2: u64 = r2.random();
        let x3: u64 = r3.random();
        assert_eq!(x1, x2);
        assert_ne!(x1, x3);
    }

    #[test]
    fn derived_seeds_depend_on_every_coordinate() {
        let base = derive_seed(1, &[2, 3]);
        assert_eq!(base, derive_seed(1, &[2, 3]));
        assert_ne!(base, derive_seed(1, &[3, 2]));
        assert_ne!(base, derive_seed(2, &[2, 3]));
        assert_ne!(base, derive_seed(1, &[2, 3, 0]));
    }
}
