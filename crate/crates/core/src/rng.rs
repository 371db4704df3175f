//! Deterministic seed derivation for replication streams.
//!
//! Replication r of an experiment draws from a stream derived from
//! (base seed, r) so that replications are order independent and can be
//! reproduced individually.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Mixes a base seed and a stream index into a single 64-bit seed.
///
/// Uses the SplitMix64 finalizer, which maps distinct inputs to
/// well-separated outputs.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(index.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// RNG for one replication of an experiment.
pub fn replication_rng(base: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, index))
}
