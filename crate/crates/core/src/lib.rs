//! Nowcasting low-frequency probability distributions from
//! high-frequency indicators.
//!
//! The pipeline: micro samples are smoothed into densities
//! ([`distribution`]), mapped to log-quantile-density curves and
//! compressed to a small factor panel by functional PCA ([`fpca`]); a
//! mixed-frequency regression design links the factors to
//! higher-frequency indicators ([`midas`]); Bayesian estimators produce
//! posterior factor forecasts ([`bayes`]); forecasts map back to
//! densities and are scored by distributional accuracy metrics
//! ([`forecast`], [`evaluation`]); a simulation harness ([`monte_carlo`])
//! exercises the whole chain.

pub mod bayes;
pub mod distribution;
pub mod error;
pub mod evaluation;
pub mod forecast;
pub mod fpca;
pub mod io;
pub mod midas;
pub mod monte_carlo;

pub use error::{Error, Result};

/// Derives the seed of an indexed independent stream from a master seed.
///
/// Stable in the index, so growing a study keeps earlier streams intact.
pub fn stream_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9E3779B97F4A7C15);
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}
