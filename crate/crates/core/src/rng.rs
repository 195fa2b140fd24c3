//! Counter-derived random streams.
//!
//! Every Monte Carlo routine in the crate splits its work into fixed-size
//! blocks and draws block `b` from stream `b` of a ChaCha generator keyed by
//! the master seed. Results are therefore identical regardless of how many
//! worker threads pick up the blocks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Samples per block for the batch samplers.
pub const SAMPLE_BLOCK: usize = 1 << 14;

/// Generator for block `block` under master `seed`.
pub fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Derives an independent master seed for a sub-experiment (e.g. one SNR point).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer over the combined words
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Splits `n` items into `(block index, length)` pairs of at most `block` items.
pub fn blocks(n: usize, block: usize) -> impl Iterator<Item = (u64, usize)> {
    let count = n.div_ceil(block);
    (0..count).map(move |b| (b as u64, block.min(n - b * block)))
}
