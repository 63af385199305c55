//! Sampling distributions over `[-1, 1]`.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A distribution confined to `[-1, 1]`. Gaussians are truncated by
/// resampling, which keeps the density shape inside the interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DistSpec {
    /// Uniform over the whole interval.
    Uniform,
    /// Normal(mean, stddev) truncated to the interval by resampling.
    Gaussian { mean: f64, stddev: f64 },
    /// Degenerate point mass.
    Point { value: f64 },
}

impl DistSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DistSpec::Uniform => Ok(()),
            DistSpec::Gaussian { mean, stddev } => {
                if !mean.is_finite() || !stddev.is_finite() || stddev <= 0.0 {
                    return Err(Error::InvalidParams(format!(
                        "gaussian needs finite mean and stddev > 0, got mean={mean}, stddev={stddev}"
                    )));
                }
                // Resampling must be able to terminate.
                if mean - 6.0 * stddev > 1.0 || mean + 6.0 * stddev < -1.0 {
                    return Err(Error::InvalidParams(
                        "gaussian mass lies essentially outside [-1, 1]".into(),
                    ));
                }
                Ok(())
            }
            DistSpec::Point { value } => {
                if !value.is_finite() || !(-1.0..=1.0).contains(&value) {
                    return Err(Error::InvalidParams(format!(
                        "point mass must lie in [-1, 1], got {value}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Draws one value; always lands in `[-1, 1]`.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            DistSpec::Uniform => rng.random_range(-1.0..=1.0),
            DistSpec::Gaussian { mean, stddev } => {
                let normal = Normal::new(mean, stddev).expect("validated stddev");
                loop {
                    let v = normal.sample(rng);
                    if (-1.0..=1.0).contains(&v) {
                        return v;
                    }
                }
            }
            DistSpec::Point { value } => value,
        }
    }
}
