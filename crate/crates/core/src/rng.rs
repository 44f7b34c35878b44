//! Seeded random streams.
//!
//! Every random draw in the crate comes from ChaCha20 keyed by the user seed,
//! with the ChaCha stream id selecting an independent substream. Graph
//! sampling attempt `k` uses stream `k`; cost matrices use [`COST_STREAM`].
//! Gaussian entries use the ziggurat sampler of `rand_distr::StandardNormal`.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Substream reserved for the Gaussian cost data.
pub const COST_STREAM: u64 = u64::MAX;

pub fn stream(seed: u64, stream_id: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}
