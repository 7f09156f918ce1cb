//! Seeded random streams.
//!
//! Every random quantity comes from a ChaCha8 generator keyed by a root seed
//! and a stream number. Trial `t` of an experiment uses stream `t`, so trials
//! are reproducible individually and independent of execution order.

pub use rand::RngCore;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

pub fn stream(seed: u64, stream: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform on `[0, 1)`.
pub fn uniform(rng: &mut dyn RngCore) -> f64 {
    let r = rng;
    r.random::<f64>()
}

/// Uniform on `[lo, hi]` (up to the open right end).
pub fn uniform_in(rng: &mut dyn RngCore, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform(rng)
}

/// Uniform on `0..n`.
pub fn index(rng: &mut dyn RngCore, n: usize) -> usize {
    let r = rng;
    r.random_range(0..n)
}
