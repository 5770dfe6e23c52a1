//! WiFi interference modelling and white-space prediction for low-power
//! radios sharing the 2.4 GHz band.
//!
//! The pipeline:
//!
//! 1. [`trace`]: load per-channel packet timestamps and merge the channels
//!    that overlap the 802.15.4 channel of interest.
//! 2. [`stats`]: summarise the inter-arrival times by mean, coefficient of
//!    variation and Hurst exponent.
//! 3. [`mmpp`]: fit a two-state MMPP to those statistics; its steady state
//!    and switching rates parameterise the predictor.
//! 4. [`hmm`]: train a Free/Busy hidden Markov model on windowed mean-IAT
//!    observations and predict the channel state slot by slot.
//! 5. [`eval`]: score models (quantile RMSE) and predictors (hit rate, FDR,
//!    F1) against the [`baselines`].
//!
//! All randomness flows from explicit `u64` seeds through ChaCha8
//! ([`seeded_rng`]), so every run is reproducible.

pub mod baselines;
pub mod cli;
pub mod eval;
pub mod hmm;
pub mod mmpp;
pub mod pipeline;
pub mod stats;
pub mod trace;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator behind every stochastic routine.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent sub-seed for stream `stream` of `seed` (SplitMix64 mix).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn ms_to_us(ms: f64) -> u64 {
    (ms * 1e3).round() as u64
}

pub fn seconds_to_us(s: f64) -> u64 {
    (s * 1e6).round() as u64
}
