//! Seedable counter-based RNG with per-run substreams.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout: counter-based, so independent substreams
/// are cheap and reproducible.
pub type RunRng = ChaCha8Rng;

/// Substream `run_index` of the generator keyed by `seed`. Streams with the
/// same seed and different indices are statistically independent, which is
/// what makes parallel Monte-Carlo reproducible regardless of scheduling.
pub fn substream(seed: u64, run_index: u64) -> RunRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run_index);
    rng
}
