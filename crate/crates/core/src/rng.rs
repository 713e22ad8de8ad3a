//! Seed derivation and the random generator used for every pool.
//!
//! One master seed fans out into numbered sub-streams:
//! `seed_i = splitmix64(master ^ i)`. The stream indices used by the
//! simulation study are listed in [`streams`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type PoolRng = ChaCha8Rng;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ stream)
}

pub fn generator(seed: u64) -> PoolRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Fixed stream numbering.
pub mod streams {
    /// Observations drawn from the truth (simulation); reference pool (evaluation).
    pub const OBSERVATIONS: u64 = 0;
    pub const WEIGHT: u64 = 1;

    /// Pool of the `i`-th configured candidate.
    pub fn candidate(i: usize) -> u64 {
        2 + i as u64
    }

    /// Truth reference pool used for alpha selection, placed after all candidates.
    pub fn reference(n_candidates: usize) -> u64 {
        2 + n_candidates as u64
    }

    /// Evaluation mode: pool sampled from a Gaussian forecast of `method` at `period`.
    pub fn forecast(method: usize, period: usize, n_periods: usize) -> u64 {
        2 + (method * n_periods + period) as u64
    }
}
