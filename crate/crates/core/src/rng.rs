//! Addressable random substreams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream keyed by the
//! user seed and selected by `(purpose, index)`. Work split into fixed-size
//! blocks therefore produces the same numbers whatever the thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Samples per block for block-parallel generation. Changing this changes
/// every seeded output.
pub const BLOCK: usize = 4096;

const INDEX_BITS: u32 = 48;

/// Distinguishes independent uses of the same seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Dataset = 1,
    MixupPairs = 2,
    ClassPlus = 3,
    ClassMinus = 4,
    Split = 5,
    EpochShuffle = 6,
    BatchMix = 7,
    GridPoint = 8,
}

pub fn substream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    debug_assert!(index < (1 << INDEX_BITS));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << INDEX_BITS) | index);
    rng
}

/// Derive a child seed, e.g. one per grid point.
pub fn child_seed(seed: u64, purpose: Purpose, index: u64) -> u64 {
    use rand::RngCore;
    substream(seed, purpose, index).next_u64()
}
