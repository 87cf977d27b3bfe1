//! Seed derivation. Every random stream in a run derives from the run seed
//! plus a purpose tag so that components never share draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub(crate) const STREAM_INIT: u64 = 1;
pub(crate) const STREAM_PRETRAIN_BATCHES: u64 = 2;
pub(crate) const STREAM_CLUSTER_BATCHES: u64 = 3;
pub(crate) const STREAM_KMEANS: u64 = 4;
pub(crate) const STREAM_BLOBS: u64 = 5;

/// RNG for `(seed, stream, index)`; `index` is typically an epoch or restart.
pub fn rng_for(seed: u64, stream: u64, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(stream)));
    rng.set_stream(index);
    rng
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
