//! Conjugate ridge-type prior for the (un)restricted SUR-MIDAS model:
//! matric-normal/inverse-Wishart posterior with closed-form marginal
//! likelihood and simplex hyperparameter selection.
//!
//! Prior: `vec(Phi) | Omega ~ N(Phi0, Omega ⊗ V0)` with diagonal `V0`
//! holding `theta1` on the intercept, `theta2 / (s_r^2 l^theta3)` on
//! factor lags and `theta4 / (s_r^2 l^theta5)` on high-frequency lags
//! (`l = 1` for Almon-restricted columns); `Omega ~ IW(S, v0)`. `Phi0`
//! centers the first own factor lag of each equation on 0.8.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;

use crate::bayes::{ln_multigamma, nelder_mead, sample_inverse_wishart, NelderMeadOptions};
use crate::error::{Error, Result};
use crate::midas::ColumnMeta;

/// Shrinkage hyperparameters of the ridge prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgeHyper {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
    pub theta4: f64,
    pub theta5: f64,
}

impl Default for RidgeHyper {
    fn default() -> Self {
        RidgeHyper { theta1: 100.0, theta2: 0.5, theta3: 1.0, theta4: 0.5, theta5: 1.0 }
    }
}

/// Per-series AR(1) residual variances used as prior scale units.
#[derive(Debug, Clone)]
pub struct RidgePriorScales {
    /// One per factor (indexing `ColumnMeta::FactorLag/FactorAlmon`).
    pub factor: Vec<f64>,
    /// One per high-frequency series.
    pub hf: Vec<f64>,
    /// Diagonal of the IW scale S.
    pub s_diag: Vec<f64>,
    /// IW degrees of freedom.
    pub v0: f64,
}

impl RidgePriorScales {
    /// AR(1) residual variances of the factor targets and indicator
    /// series, with v0 = K + 5 and S from the factor scales.
    pub fn from_data(factor_series: &DMatrix<f64>, hf_series: &DMatrix<f64>) -> Self {
        let factor: Vec<f64> = (0..factor_series.ncols())
            .map(|k| {
                let col: Vec<f64> = factor_series.column(k).iter().copied().collect();
                crate::bayes::ar1_residual_variance(&col)
            })
            .collect();
        let hf: Vec<f64> = (0..hf_series.ncols())
            .map(|j| {
                let col: Vec<f64> = hf_series.column(j).iter().copied().collect();
                crate::bayes::ar1_residual_variance(&col)
            })
            .collect();
        let v0 = factor.len() as f64 + 5.0;
        RidgePriorScales { s_diag: factor.clone(), factor, hf, v0 }
    }
}

/// Conjugate posterior of the ridge SUR-MIDAS regression.
#[derive(Debug, Clone)]
pub struct RidgePosterior {
    /// p x K posterior mean of Phi (row 0 = intercept).
    pub phi_mean: DMatrix<f64>,
    /// Posterior IW scale.
    pub s_bar: DMatrix<f64>,
    /// Posterior IW degrees of freedom v0 + T.
    pub df: f64,
    pub log_ml: f64,
    /// Prior variance diagonal (intercept first).
    pub v0_diag: Vec<f64>,
    // pieces for z' V0_bar z via Woodbury
    x: DMatrix<f64>,
    m_chol: Cholesky<f64, nalgebra::Dyn>,
    pub hyper: RidgeHyper,
}

fn prior_variance(meta: &ColumnMeta, hyper: &RidgeHyper, scales: &RidgePriorScales) -> f64 {
    let v = match meta {
        ColumnMeta::FactorLag { factor, lag } => {
            hyper.theta2 / (scales.factor[*factor] * (*lag as f64).powf(hyper.theta3))
        }
        ColumnMeta::FactorAlmon { factor, .. } => hyper.theta2 / scales.factor[*factor],
        ColumnMeta::HfLag { series, lag } => {
            hyper.theta4 / (scales.hf[*series] * (*lag as f64).powf(hyper.theta5))
        }
        ColumnMeta::HfAlmon { series, .. } => hyper.theta4 / scales.hf[*series],
    };
    v.clamp(1e-12, 1e8)
}

/// Closed-form conjugate posterior for the design `(x, f)`.
///
/// `x` must NOT contain an intercept column; one is prepended here with
/// prior variance `theta1`. `col_meta` describes the columns of `x`.
pub fn ridge_estimate(
    x: &DMatrix<f64>,
    f: &DMatrix<f64>,
    col_meta: &[ColumnMeta],
    hyper: &RidgeHyper,
    scales: &RidgePriorScales,
) -> Result<RidgePosterior> {
    if x.nrows() != f.nrows() {
        return Err(Error::data("design and target row counts differ"));
    }
    if col_meta.len() != x.ncols() {
        return Err(Error::data("column metadata does not match design width"));
    }
    if !(hyper.theta1 > 0.0 && hyper.theta2 > 0.0 && hyper.theta4 > 0.0) {
        return Err(Error::config("theta1, theta2, theta4 must be positive"));
    }
    let (t, k) = (f.nrows(), f.ncols());
    if scales.factor.len() != k {
        return Err(Error::config("factor scale count must equal K"));
    }
    let p = x.ncols() + 1;

    // design with intercept
    let mut xd = DMatrix::zeros(t, p);
    for r in 0..t {
        xd[(r, 0)] = 1.0;
    }
    xd.columns_mut(1, x.ncols()).copy_from(x);

    let mut v0_diag = Vec::with_capacity(p);
    v0_diag.push(hyper.theta1.clamp(1e-12, 1e8));
    for meta in col_meta {
        v0_diag.push(prior_variance(meta, hyper, scales));
    }

    // prior mean: 0.8 on the first own factor lag of each equation
    let mut phi0 = DMatrix::zeros(p, k);
    for (c, meta) in col_meta.iter().enumerate() {
        if let ColumnMeta::FactorLag { factor, lag: 1 } = meta {
            phi0[(c + 1, *factor)] = 0.8;
        }
    }

    // Woodbury in T dimensions: M = I + X V0 X'
    let xv: DMatrix<f64> = {
        let mut xv = xd.clone();
        for (c, v) in v0_diag.iter().enumerate() {
            for r in 0..t {
                xv[(r, c)] *= v;
            }
        }
        xv
    };
    let mut m = &xv * xd.transpose();
    for d in 0..t {
        m[(d, d)] += 1.0;
    }
    let m_chol =
        Cholesky::new(m).ok_or_else(|| Error::numerical("ridge posterior precision singular"))?;

    let e = f - &xd * &phi0;
    let minv_e = m_chol.solve(&e);
    let mut s_bar = DMatrix::from_fn(k, k, |i, j| if i == j { scales.s_diag[i] } else { 0.0 });
    s_bar += e.transpose() * &minv_e;

    // Phi_bar = Phi0 + V0 X' M^-1 E
    let phi_mean = &phi0 + xv.transpose() * &minv_e;

    // log marginal likelihood (matrix-t form)
    let v0 = scales.v0;
    if v0 <= (k - 1) as f64 {
        return Err(Error::config("IW degrees of freedom too small"));
    }
    let ln_det_m = {
        let l = m_chol.l_dirty();
        (0..t).map(|i| l[(i, i)].ln() * 2.0).sum::<f64>()
    };
    let s_prior_ld: f64 = scales.s_diag.iter().map(|v| v.ln()).sum();
    let s_bar_ld = Cholesky::new(s_bar.clone())
        .map(|c| (0..k).map(|i| c.l_dirty()[(i, i)].ln() * 2.0).sum::<f64>())
        .ok_or_else(|| Error::numerical("posterior scale not positive definite"))?;
    let log_ml = -0.5 * (t * k) as f64 * std::f64::consts::PI.ln()
        + ln_multigamma(k, (v0 + t as f64) / 2.0)
        - ln_multigamma(k, v0 / 2.0)
        + 0.5 * v0 * s_prior_ld
        - 0.5 * (v0 + t as f64) * s_bar_ld
        - 0.5 * k as f64 * ln_det_m;
    if !log_ml.is_finite() {
        return Err(Error::numerical("non-finite marginal likelihood"));
    }

    Ok(RidgePosterior {
        phi_mean,
        s_bar,
        df: v0 + t as f64,
        log_ml,
        v0_diag,
        x: xd,
        m_chol,
        hyper: *hyper,
    })
}

impl RidgePosterior {
    /// `z' V0_bar z` with `V0_bar = (V0^-1 + X'X)^-1`, via Woodbury.
    /// `z` excludes the intercept; it is prepended internally.
    pub fn posterior_scale(&self, z: &DVector<f64>) -> f64 {
        let mut zf = DVector::zeros(self.v0_diag.len());
        zf[0] = 1.0;
        zf.rows_mut(1, z.len()).copy_from(z);
        let v0z: DVector<f64> =
            DVector::from_fn(zf.len(), |i, _| self.v0_diag[i] * zf[i]);
        let xv0z = &self.x * &v0z;
        let sol = self.m_chol.solve(&xv0z);
        let direct: f64 = zf.iter().zip(v0z.iter()).map(|(a, b)| a * b).sum();
        (direct - xv0z.dot(&sol)).max(0.0)
    }

    /// Point forecast `Phi_bar' [1; z]`.
    pub fn point_forecast(&self, z: &DVector<f64>) -> DVector<f64> {
        let mut zf = DVector::zeros(self.v0_diag.len());
        zf[0] = 1.0;
        zf.rows_mut(1, z.len()).copy_from(z);
        self.phi_mean.transpose() * zf
    }

    /// Draws from the posterior predictive of `f_{t+h}` given the design
    /// row `z`: `N(Phi_bar' z, (1 + z' V0_bar z) Omega)` with
    /// `Omega ~ IW(S_bar, df)` per draw.
    pub fn forecast_draws<R: Rng>(
        &self,
        z: &DVector<f64>,
        n_draws: usize,
        rng: &mut R,
    ) -> Result<DMatrix<f64>> {
        let k = self.s_bar.nrows();
        let mean = self.point_forecast(z);
        let scale = (1.0 + self.posterior_scale(z)).sqrt();
        let mut out = DMatrix::zeros(n_draws, k);
        for s in 0..n_draws {
            let omega = sample_inverse_wishart(&self.s_bar, self.df, rng)?;
            let l = Cholesky::new(omega)
                .ok_or_else(|| Error::numerical("IW draw not positive definite"))?
                .l();
            let eta = DVector::from_fn(k, |_, _| {
                rng.sample::<f64, _>(rand_distr::StandardNormal)
            });
            let draw = &mean + l * eta * scale;
            out.row_mut(s).copy_from(&draw.transpose());
        }
        Ok(out)
    }
}

/// Maximizes the marginal likelihood over the hyperparameters by
/// Nelder-Mead in log space. `restricted` drops the lag-decay exponents
/// (columns carry `l = 1`).
pub fn ridge_ml_optimize(
    x: &DMatrix<f64>,
    f: &DMatrix<f64>,
    col_meta: &[ColumnMeta],
    init: &RidgeHyper,
    scales: &RidgePriorScales,
    restricted: bool,
) -> Result<(RidgeHyper, f64)> {
    let has_hf = col_meta.iter().any(|m| matches!(m, ColumnMeta::HfLag { .. } | ColumnMeta::HfAlmon { .. }));
    let build = |params: &[f64]| -> RidgeHyper {
        let mut h = RidgeHyper {
            theta1: params[0].exp(),
            theta2: params[1].exp(),
            theta3: init.theta3,
            theta4: init.theta4,
            theta5: init.theta5,
        };
        let mut pos = 2;
        if has_hf {
            h.theta4 = params[pos].exp();
            pos += 1;
        }
        if !restricted {
            h.theta3 = params[pos].exp();
            if has_hf {
                h.theta5 = params[pos + 1].exp();
            }
        }
        h
    };
    let mut x0 = vec![init.theta1.ln(), init.theta2.ln()];
    if has_hf {
        x0.push(init.theta4.ln());
    }
    if !restricted {
        x0.push(init.theta3.max(1e-6).ln());
        if has_hf {
            x0.push(init.theta5.max(1e-6).ln());
        }
    }

    let objective = |params: &[f64]| -> f64 {
        let h = build(params);
        match ridge_estimate(x, f, col_meta, &h, scales) {
            Ok(post) => post.log_ml,
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let f0 = objective(&x0);
    if !f0.is_finite() {
        return Err(Error::numerical("marginal likelihood non-finite at the initial point"));
    }
    let (best, val) = nelder_mead(objective, &x0, NelderMeadOptions::default());
    if val < f0 {
        return Ok((build(&x0), f0));
    }
    Ok((build(&best), val))
}
