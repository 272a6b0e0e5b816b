//! Counter-derived RNG streams.
//!
//! Every stochastic routine in the crate derives one ChaCha stream per unit
//! of work (projection, bootstrap replicate, trial) from a base seed and a
//! counter, so results are independent of execution order and thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG for stream `stream` of the generator family identified by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
