//! Counter-based splittable randomness.
//!
//! Every trial of every experiment owns the ChaCha stream `(seed, trial)`, so
//! results do not depend on scheduling or on the number of workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

/// Generator for trial `trial` of the experiment seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// A second independent family of streams for auxiliary draws (test vectors,
/// subsampled index pairs) that must not perturb the graph stream.
pub fn aux_rng(seed: u64, trial: u64, tag: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(trial);
    rng
}
