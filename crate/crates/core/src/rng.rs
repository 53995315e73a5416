//! Seeded random streams.
//!
//! Every stochastic operation takes a `u64` seed and draws from ChaCha8.
//! Work that fans out (bootstrap replications, runs of an ensemble, rows of
//! a log X simulation) uses [`substream`]: the ChaCha8 key comes from the
//! parent seed and the 64-bit stream id is `index + 1`, so item `index`
//! gets the same numbers no matter how the work is scheduled. Stream 0 is
//! what [`rng_from_seed`] returns.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type NsRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> NsRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn substream(seed: u64, index: u64) -> NsRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(1));
    rng
}

/// Child seed for item `index`: the first word of its substream.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    substream(seed, index).next_u64()
}
