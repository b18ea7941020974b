//! Deterministic random-number plumbing.
//!
//! Every stochastic quantity in the simulator is drawn from a ChaCha8 stream
//! derived from one master seed. Each Monte-Carlo trial gets its own stream
//! (`set_stream(trial_index)`), so results are independent of how trials are
//! scheduled across worker threads and reproducible from `(seed, trial)`
//! alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG for one-off draws outside the per-trial loop (e.g. backoff demos).
pub fn master_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for one Monte-Carlo trial.
///
/// Streams with different `trial` values never overlap, so parallel workers
/// can draw from their own trial RNGs without coordination.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}
