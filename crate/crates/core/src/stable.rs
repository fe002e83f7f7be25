//! Symmetric alpha-stable random variates and the Levy-measure constant.
//!
//! Variates follow the standard symmetric law with characteristic function
//! exp(-|xi|^alpha), generated by the Chambers-Mallows-Stuck construction.
//! The same normalization fixes the Levy measure
//! nu(du) = c(1,alpha) |u|^(-1-alpha) du used by the non-local Fokker-Planck
//! operator, so sampled paths and the density solver describe one and the
//! same process.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StableError {
    #[error("stability index must lie in (0, 2), got {0}")]
    AlphaOutOfRange(f64),
    #[error("invalid noise specification: {0}")]
    InvalidSpec(String),
}

/// One noise channel: stability index and intensity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableNoiseSpec {
    /// Stability index in (0, 2]; 2 is the Gaussian endpoint.
    pub alpha: f64,
    /// Noise intensity, >= 0.
    pub sigma: f64,
}

impl StableNoiseSpec {
    pub fn new(alpha: f64, sigma: f64) -> Self {
        StableNoiseSpec { alpha, sigma }
    }

    /// Zero-intensity channel (the index is irrelevant but kept valid).
    pub fn off() -> Self {
        StableNoiseSpec {
            alpha: 2.0,
            sigma: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), StableError> {
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return Err(StableError::InvalidSpec(format!(
                "alpha must lie in (0, 2], got {}",
                self.alpha
            )));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(StableError::InvalidSpec(format!(
                "sigma must be finite and >= 0, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// A counter-style random stream: the same (seed, stream_id) always yields
/// the same variate sequence, and distinct stream ids give independent
/// sequences. Streams are plain values and may be moved across threads.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream { rng }
    }

    /// Uniform draw in the open interval (0, 1).
    fn uniform_open(&mut self) -> f64 {
        loop {
            // random::<f64>() is in [0, 1); map to (0, 1]
            let u = 1.0 - self.rng.random::<f64>();
            if u < 1.0 {
                return u;
            }
        }
    }

    /// Uniform draw in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

/// The constant c(1, alpha) = alpha Gamma((1+alpha)/2) / (2^(1-alpha) sqrt(pi) Gamma(1-alpha/2))
/// that normalizes the symmetric Levy measure nu(du) = c(1,alpha)|u|^(-1-alpha) du.
///
/// Defined for alpha in the open interval (0, 2); the formula degenerates at
/// the Gaussian endpoint.
pub fn levy_constant(alpha: f64) -> Result<f64, StableError> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(StableError::AlphaOutOfRange(alpha));
    }
    let log = alpha.ln() + libm::lgamma(0.5 * (1.0 + alpha))
        - (1.0 - alpha) * std::f64::consts::LN_2
        - 0.5 * PI.ln()
        - libm::lgamma(1.0 - 0.5 * alpha);
    Ok(log.exp())
}

/// One draw from the standard symmetric alpha-stable law with characteristic
/// function exp(-|xi|^alpha).
///
/// alpha = 2 gives Normal(0, variance 2); alpha = 1 the standard Cauchy,
/// handled by its exact tan branch.
pub fn sample_standard_stable(alpha: f64, rng: &mut RngStream) -> f64 {
    assert!(
        alpha > 0.0 && alpha <= 2.0,
        "stability index must lie in (0, 2], got {alpha}"
    );
    let u = (rng.uniform() - 0.5) * PI; // uniform on [-pi/2, pi/2)
    if alpha == 1.0 {
        return u.tan();
    }
    let w = -rng.uniform_open().ln(); // Exp(1), strictly positive
    let cos_u = u.cos();
    // Chambers-Mallows-Stuck, symmetric case
    let lead = (alpha * u).sin() / cos_u.powf(1.0 / alpha);
    lead * (((1.0 - alpha) * u).cos() / w).powf((1.0 - alpha) / alpha)
}

/// Increment of the scaled process sigma * L^alpha over a step dt,
/// distributionally sigma * dt^(1/alpha) times a standard draw.
///
/// A zero-intensity channel returns 0 without consuming the stream.
pub fn sample_increment(spec: &StableNoiseSpec, dt: f64, rng: &mut RngStream) -> f64 {
    debug_assert!(dt > 0.0);
    if spec.sigma == 0.0 {
        return 0.0;
    }
    spec.sigma * dt.powf(1.0 / spec.alpha) * sample_standard_stable(spec.alpha, rng)
}
