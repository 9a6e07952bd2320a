//! Seeded random streams.
//!
//! Every stochastic operation draws from a [`Stream`], which is ChaCha8
//! seeded from a 64-bit key. Keys for sub-streams (one per simulated trial,
//! one per Monte Carlo chunk, ...) are derived with [`derive_seed`], so a
//! result depends only on the user seed and the work item index, never on
//! how items are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator behind every stochastic operation in the crate.
pub type Stream = ChaCha8Rng;

/// Domain tags keep streams for different purposes disjoint.
pub mod domain {
    pub const TRIAL: u64 = 0x7472_6961_6c00_0001;
    pub const MC_CHUNK: u64 = 0x6d63_6368_756e_6b02;
    pub const B_TABLE: u64 = 0x6274_6162_6c65_0003;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `seed` with a sequence of tags into a new 64-bit key.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(seed), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

pub fn stream(seed: u64) -> Stream {
    Stream::seed_from_u64(seed)
}

pub fn derived_stream(seed: u64, tags: &[u64]) -> Stream {
    stream(derive_seed(seed, tags))
}
