//! Seed derivation for reproducible parallel streams.
//!
//! Every parallel work item gets its own generator seeded with
//! `mix64(base ^ stream)`, so results never depend on how work is
//! scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Rows generated per independently seeded block.
pub const BLOCK_ROWS: usize = 4096;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for stream `stream` derived from `base`.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    mix64(base ^ stream)
}

pub fn rng_from(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream_rng(base: u64, stream: u64) -> Rng {
    rng_from(derive_seed(base, stream))
}

/// Splits `count` rows into `(block_index, rows)` pairs of at most [`BLOCK_ROWS`].
pub(crate) fn blocks(count: usize) -> impl Iterator<Item = (u64, usize)> {
    (0..count.div_ceil(BLOCK_ROWS)).map(move |b| {
        let start = b * BLOCK_ROWS;
        (b as u64, BLOCK_ROWS.min(count - start))
    })
}
