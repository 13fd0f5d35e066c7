//! Reproducible random streams.
//!
//! Every (root seed, run, particle) triple addresses its own block of the
//! ChaCha8 keystream: the run selects the stream id and the particle index
//! selects a 2^20-word window inside it. Streams never overlap, so trials can be
//! simulated in any order or in parallel with identical results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// 32-bit words reserved per particle.
const WORDS_PER_PARTICLE: u128 = 1 << 20;

pub fn particle_stream(root_seed: u64, run: u64, particle: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(root_seed);
    rng.set_stream(run);
    rng.set_word_pos(particle as u128 * WORDS_PER_PARTICLE);
    rng
}

/// Stream for run-level draws that are not tied to a particle.
pub fn run_stream(root_seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(root_seed ^ 0x9e37_79b9_7f4a_7c15);
    rng.set_stream(run);
    rng
}
