//! Seedable, splittable random streams.
//!
//! Every replicate draws from a ChaCha stream that is a pure function of
//! `(master seed, lane, index)`, so results are bit-identical no matter how
//! work is scheduled across threads. Lanes separate the independent sources
//! of randomness inside one experiment (fixed conditioning objects, matrix
//! draws, environment draws, auxiliary Gaussians).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream lane for objects frozen once per experiment (quenched ω or u).
pub const LANE_FIXED: u64 = 0;
/// Stream lane for per-replicate matrix (or weight/permutation) draws.
pub const LANE_MATRIX: u64 = 1;
/// Stream lane for per-replicate environment draws.
pub const LANE_ENV: u64 = 2;
/// Stream lane for auxiliary variates (e.g. Gaussian probe vectors).
pub const LANE_AUX: u64 = 3;

const INDEX_BITS: u64 = 56;
const INDEX_MASK: u64 = (1 << INDEX_BITS) - 1;

/// RNG for stream `(master_seed, lane, index)`.
pub fn stream_rng(master_seed: u64, lane: u64, index: u64) -> ChaCha8Rng {
    debug_assert!(index <= INDEX_MASK, "replicate index exceeds stream space");
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream((lane << INDEX_BITS) | (index & INDEX_MASK));
    rng
}
