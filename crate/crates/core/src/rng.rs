//! Counter-based random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 generator keyed
//! by `(seed, stream)`. Workers never share a generator; a trial's stream is
//! its index, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Exponential variate with the given rate.
pub fn exponential<R: rand::Rng>(rng: &mut R, rate: f64) -> f64 {
    // 1 - U lies in (0, 1], so the logarithm is finite.
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}
