//! Posterior simulation for the SUR-MIDAS system: the spike-and-slab
//! group-lasso Gibbs sampler, the conjugate ridge competitor, and VAR
//! baselines.

mod nelder_mead;
mod ridge;
mod spike_slab;
mod var;

pub use nelder_mead::{nelder_mead, NelderMeadOptions};
pub use ridge::{
    ridge_estimate, ridge_ml_optimize, RidgeHyper, RidgePosterior, RidgePriorScales,
};
pub use spike_slab::{
    gibbs_run, GibbsConfig, GibbsSampler, LambdaMode, SpikeSlabPrior, SurMidasDraws, V0Rule,
};
pub use var::{var_baseline, VarFit, VarMode};

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};

/// Lower-triangular matrix with unit diagonal built from the free
/// entries `alpha[i][c]`, rows holding `[-alpha_i1, ..., -alpha_i,i-1, 1]`.
pub fn a_tilde(alpha: &DMatrix<f64>) -> DMatrix<f64> {
    let k = alpha.nrows();
    let mut a = DMatrix::identity(k, k);
    for i in 1..k {
        for c in 0..i {
            a[(i, c)] = -alpha[(i, c)];
        }
    }
    a
}

/// Error covariance implied by the triangular parameters:
/// `Omega = A~^-1 Sigma (A~^-1)'`.
pub fn omega_from_triangular(alpha: &DMatrix<f64>, sigma2: &[f64]) -> DMatrix<f64> {
    let k = sigma2.len();
    let a = a_tilde(alpha);
    // solve A~ X = diag(sigma) by forward substitution, Omega = X X'
    let mut x = DMatrix::zeros(k, k);
    for j in 0..k {
        let mut col = DVector::zeros(k);
        col[j] = sigma2[j].sqrt();
        for r in 0..k {
            let mut acc = col[r];
            for c in 0..r {
                acc -= a[(r, c)] * x[(c, j)];
            }
            x[(r, j)] = acc;
        }
    }
    &x * x.transpose()
}

/// Draws `(alpha, sigma2)` from the triangular prior
/// `sigma_i^2 ~ IG((v0 + i - K)/2, s_i^2/2)`,
/// `alpha_ic | sigma_i^2 ~ N(0, sigma_i^2 / s_c^2)`.
pub fn sample_triangular_prior<R: Rng>(
    k: usize,
    v0: f64,
    s2: &[f64],
    rng: &mut R,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let mut alpha = DMatrix::zeros(k, k);
    let mut sigma2 = vec![0.0; k];
    for i in 0..k {
        let shape = (v0 + (i + 1) as f64 - k as f64) / 2.0;
        if shape <= 0.0 {
            return Err(Error::config(format!(
                "nonpositive Inverse-Gamma shape for equation {}: v0 must exceed K",
                i + 1
            )));
        }
        sigma2[i] = sample_inv_gamma(shape, s2[i] / 2.0, rng)?;
        for c in 0..i {
            let sd = (sigma2[i] / s2[c]).sqrt();
            alpha[(i, c)] = sd * rng.sample::<f64, _>(StandardNormal);
        }
    }
    Ok((alpha, sigma2))
}

/// Inverse-Gamma(shape, rate) draw via a Gamma reciprocal.
pub fn sample_inv_gamma<R: Rng>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    let g = Gamma::new(shape, 1.0 / rate)
        .map_err(|e| Error::numerical(format!("invalid Gamma({shape}, rate {rate}): {e}")))?;
    let draw: f64 = g.sample(rng);
    if draw <= 0.0 {
        return Err(Error::numerical("degenerate Gamma draw"));
    }
    Ok(1.0 / draw)
}

/// Inverse-Wishart(scale, df) draw via the Bartlett decomposition.
pub fn sample_inverse_wishart<R: Rng>(
    scale: &DMatrix<f64>,
    df: f64,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let k = scale.nrows();
    if df <= (k - 1) as f64 {
        return Err(Error::config(format!("IW degrees of freedom {df} too small for K = {k}")));
    }
    let inv_scale = scale
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::numerical("singular IW scale matrix"))?;
    let l = Cholesky::new(inv_scale)
        .ok_or_else(|| Error::numerical("IW scale inverse not positive definite"))?
        .l();
    let mut bart = DMatrix::zeros(k, k);
    for i in 0..k {
        let chi = Gamma::new((df - i as f64) / 2.0, 2.0)
            .map_err(|e| Error::numerical(format!("invalid chi-square draw: {e}")))?;
        bart[(i, i)] = chi.sample(rng).max(1e-300).sqrt();
        for j in 0..i {
            bart[(i, j)] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    // W = (L B)(L B)' ~ Wishart(df, scale^-1); Omega = W^-1
    let lb = l * bart;
    let w = &lb * lb.transpose();
    w.try_inverse().ok_or_else(|| Error::numerical("singular Wishart draw"))
}

/// Residual variance of an AR(1) fit with intercept, by OLS.
pub fn ar1_residual_variance(series: &[f64]) -> f64 {
    let n = series.len();
    if n < 3 {
        return variance(series).max(1e-12);
    }
    let y = &series[1..];
    let x = &series[..n - 1];
    let nf = (n - 1) as f64;
    let (mx, my) = (x.iter().sum::<f64>() / nf, y.iter().sum::<f64>() / nf);
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx <= 0.0 {
        return variance(series).max(1e-12);
    }
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum();
    (rss / (nf - 2.0).max(1.0)).max(1e-12)
}

pub(crate) fn variance(series: &[f64]) -> f64 {
    let n = series.len() as f64;
    if n < 2.0 {
        return 0.0;
    }
    let m = series.iter().sum::<f64>() / n;
    series.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Multivariate log-gamma function `ln Gamma_K(a)`.
pub(crate) fn ln_multigamma(k: usize, a: f64) -> f64 {
    let base = k as f64 * (k as f64 - 1.0) / 4.0 * std::f64::consts::PI.ln();
    base + (0..k)
        .map(|i| statrs::function::gamma::ln_gamma(a - i as f64 / 2.0))
        .sum::<f64>()
}
