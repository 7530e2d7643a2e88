//! Deterministic per-trial random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream `trial` of the generator keyed by `seed`. Independent of how trials
/// are scheduled, so serial and parallel runs see identical draws.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}
