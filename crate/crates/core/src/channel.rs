//! Rayleigh block-fading channel power gains.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`), a portable counter-mode
//! generator whose output is fixed by its seed on every platform. A parent
//! seed expands into a 256-bit key through `SeedableRng::seed_from_u64`, and
//! substreams are separated by the generator's 64-bit stream id, so streams
//! with distinct indices never overlap.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{field} must be finite and positive, got {value}")]
pub struct FadingError {
    pub field: &'static str,
    pub value: f64,
}

/// Means of the exponentially distributed power gains `|h|^2` and `|g|^2`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FadingParams {
    lambda_h: f64,
    lambda_g: f64,
}

impl FadingParams {
    pub fn new(lambda_h: f64, lambda_g: f64) -> Result<Self, FadingError> {
        for (field, value) in [("lambda_h", lambda_h), ("lambda_g", lambda_g)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(FadingError { field, value });
            }
        }
        Ok(Self { lambda_h, lambda_g })
    }

    pub fn lambda_h(&self) -> f64 {
        self.lambda_h
    }

    pub fn lambda_g(&self) -> f64 {
        self.lambda_g
    }
}

/// One block's source-relay and relay-destination power gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelRealization {
    pub h_sq: f64,
    pub g_sq: f64,
}

/// Deterministic random stream. Single owner; never shared between workers.
#[derive(Debug, Clone)]
pub struct RngStream(ChaCha8Rng);

impl RngStream {
    /// Uniform on (0, 1], 53-bit resolution. Never returns 0.
    pub fn uniform_open0(&mut self) -> f64 {
        let bits = self.0.next_u64() >> 11;
        (bits + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
}

pub fn make_rng(seed: u64) -> RngStream {
    RngStream(ChaCha8Rng::seed_from_u64(seed))
}

/// Stream `index` of the family rooted at `parent_seed`.
pub fn substream(parent_seed: u64, index: u64) -> RngStream {
    let mut rng = ChaCha8Rng::seed_from_u64(parent_seed);
    rng.set_stream(index);
    RngStream(rng)
}

/// Inverse-CDF exponential draw with the given mean.
#[inline]
pub fn sample_exponential(rng: &mut RngStream, mean: f64) -> f64 {
    -mean * rng.uniform_open0().ln()
}

/// Draws `|h|^2` then `|g|^2`.
#[inline]
pub fn sample_channel(rng: &mut RngStream, fading: &FadingParams) -> ChannelRealization {
    let h_sq = sample_exponential(rng, fading.lambda_h);
    let g_sq = sample_exponential(rng, fading.lambda_g);
    ChannelRealization { h_sq, g_sq }
}
