//! Deterministic stream derivation.
//!
//! Every sampling operation draws from a ChaCha8 generator keyed by
//! `(seed, context, index)`: the seed selects the key, and a splitmix64 hash
//! of the context/index pair selects the stream. Distinct contexts (disorder,
//! spike, trial, ...) and indices therefore yield independent streams without
//! any sequential handoff, which keeps parallel trials reproducible
//! independent of scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream contexts. Keeping them in one place avoids accidental reuse of the
/// same (context, index) pair for two different purposes.
pub mod context {
    pub const DISORDER: u64 = 1;
    pub const SPIKE: u64 = 2;
    pub const TRIAL: u64 = 3;
    pub const MC: u64 = 4;
    pub const SUBGAUSSIAN: u64 = 5;
    pub const PAIR: u64 = 6;
}

/// splitmix64 finalizer; bijective on u64.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for the given seed, context and index.
pub fn stream(seed: u64, context: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // +1 keeps (0, 0) away from the default stream id 0.
    rng.set_stream(mix64(
        (context.wrapping_add(1))
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(index),
    ));
    rng
}

/// Collapse (master seed, label) into a fresh 64-bit seed, for handing
/// sub-experiments their own seed space.
pub fn derive_seed(master: u64, label: u64) -> u64 {
    mix64(master ^ mix64(label.wrapping_add(0x5851_f42d_4c95_7f2d)))
}
