use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deterministic RNG for one named purpose under a run seed. ChaCha is
/// counter based, so distinct stream ids never overlap.
pub fn stream(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

pub fn fill_uniform(rng: &mut impl Rng, out: &mut [f64], bound: f64) {
    for x in out {
        *x = rng.random_range(-bound..=bound);
    }
}

/// Glorot/Xavier uniform bound.
pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}
