//! Seedable RNG construction and substream derivation.
//!
//! Every randomized routine in this crate takes either a seed or an `&mut`
//! RNG so that runs are reproducible. Parallel work (simulation replications,
//! per-candidate evaluation) derives independent substreams from a master
//! seed up front, which keeps results identical regardless of thread
//! scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Build the deterministic RNG used throughout the crate.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive an independent stream seed from a master seed and a stream index.
///
/// Uses the splitmix64 finalizer, which is bijective in the combined input,
/// so distinct (master, salt) pairs never collide on the same stream.
pub fn derive_seed(master: u64, salt: u64) -> u64 {
    let mut z = master
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(salt)
        .wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
