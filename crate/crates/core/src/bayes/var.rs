//! Functional VAR baselines on the low-frequency factors only.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::bayes::ridge::{ridge_estimate, ridge_ml_optimize, RidgeHyper, RidgePriorScales};
use crate::bayes::RidgePosterior;
use crate::error::{Error, Result};
use crate::fpca::FactorSeries;
use crate::midas::ColumnMeta;

/// Estimation mode of the factor VAR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarMode {
    /// Equation-wise OLS with a Gaussian residual covariance.
    Flat,
    /// Ridge prior over the factor lags with ML-selected shrinkage.
    Ridge,
}

/// Fitted VAR(p) over factors.
#[derive(Debug, Clone)]
pub struct VarFit {
    pub p: usize,
    pub mode: VarMode,
    /// Flat mode: (1 + K p) x K coefficients (intercept first).
    pub coefs: Option<DMatrix<f64>>,
    /// Flat mode: residual covariance.
    pub resid_cov: Option<DMatrix<f64>>,
    /// Ridge mode: the conjugate posterior.
    pub posterior: Option<RidgePosterior>,
    pub k: usize,
}

fn lag_design(factors: &FactorSeries, p: usize) -> (DMatrix<f64>, DMatrix<f64>, Vec<ColumnMeta>) {
    let (t, k) = (factors.len(), factors.k());
    let rows = t - p;
    let mut x = DMatrix::zeros(rows, k * p);
    let mut y = DMatrix::zeros(rows, k);
    for r in 0..rows {
        let t_idx = r + p;
        for lag in 1..=p {
            for kk in 0..k {
                x[(r, (lag - 1) * k + kk)] = factors.scores[(t_idx - lag, kk)];
            }
        }
        for kk in 0..k {
            y[(r, kk)] = factors.scores[(t_idx, kk)];
        }
    }
    let mut meta = Vec::with_capacity(k * p);
    for lag in 1..=p {
        for kk in 0..k {
            meta.push(ColumnMeta::FactorLag { factor: kk, lag });
        }
    }
    (x, y, meta)
}

/// Fits a VAR(p) to the factor series.
pub fn var_baseline(factors: &FactorSeries, p: usize, mode: VarMode) -> Result<VarFit> {
    let (t, k) = (factors.len(), factors.k());
    if p == 0 {
        return Err(Error::config("VAR order p must be >= 1"));
    }
    if t <= p {
        return Err(Error::data("factor series shorter than the VAR order"));
    }
    let (x, y, meta) = lag_design(factors, p);
    match mode {
        VarMode::Flat => {
            let ncol = 1 + k * p;
            if x.nrows() <= ncol {
                return Err(Error::data(format!(
                    "flat VAR needs T > K p + 1 (have {} rows for {} coefficients)",
                    x.nrows(),
                    ncol
                )));
            }
            let mut xd = DMatrix::zeros(x.nrows(), ncol);
            for r in 0..x.nrows() {
                xd[(r, 0)] = 1.0;
            }
            xd.columns_mut(1, k * p).copy_from(&x);
            let xtx = xd.transpose() * &xd;
            let coefs = xtx
                .lu()
                .solve(&(xd.transpose() * &y))
                .ok_or_else(|| Error::numerical("singular VAR design"))?;
            let resid = &y - &xd * &coefs;
            let dof = (x.nrows() - ncol) as f64;
            let cov = resid.transpose() * &resid / dof;
            Ok(VarFit {
                p,
                mode,
                coefs: Some(coefs),
                resid_cov: Some(cov),
                posterior: None,
                k,
            })
        }
        VarMode::Ridge => {
            let scales = RidgePriorScales::from_data(&factors.scores, &DMatrix::zeros(t, 0));
            let (hyper, _) =
                ridge_ml_optimize(&x, &y, &meta, &RidgeHyper::default(), &scales, false)?;
            let post = ridge_estimate(&x, &y, &meta, &hyper, &scales)?;
            Ok(VarFit { p, mode, coefs: None, resid_cov: None, posterior: Some(post), k })
        }
    }
}

impl VarFit {
    /// Regressor row for forecasting the period after the series end:
    /// the last p factor rows, newest first.
    pub fn forecast_regressors(&self, factors: &FactorSeries) -> Result<DVector<f64>> {
        let (t, k) = (factors.len(), factors.k());
        if t < self.p {
            return Err(Error::data("not enough factor history to forecast"));
        }
        let mut z = DVector::zeros(k * self.p);
        for lag in 1..=self.p {
            for kk in 0..k {
                z[(lag - 1) * k + kk] = factors.scores[(t - lag, kk)];
            }
        }
        Ok(z)
    }

    /// Point forecast of the next-period factors.
    pub fn point_forecast(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        match self.mode {
            VarMode::Flat => {
                let coefs = self.coefs.as_ref().unwrap();
                let mut zf = DVector::zeros(1 + z.len());
                zf[0] = 1.0;
                zf.rows_mut(1, z.len()).copy_from(z);
                Ok(coefs.transpose() * zf)
            }
            VarMode::Ridge => Ok(self.posterior.as_ref().unwrap().point_forecast(z)),
        }
    }

    /// Forecast draws: flat mode adds Gaussian residual noise around the
    /// OLS point forecast; ridge mode samples the posterior predictive.
    pub fn forecast_draws<R: Rng>(
        &self,
        z: &DVector<f64>,
        n_draws: usize,
        rng: &mut R,
    ) -> Result<DMatrix<f64>> {
        match self.mode {
            VarMode::Flat => {
                let mean = self.point_forecast(z)?;
                let chol = Cholesky::new(self.resid_cov.clone().unwrap())
                    .ok_or_else(|| Error::numerical("residual covariance not PD"))?;
                let l = chol.l();
                let mut out = DMatrix::zeros(n_draws, self.k);
                for s in 0..n_draws {
                    let eta =
                        DVector::from_fn(self.k, |_, _| rng.sample::<f64, _>(StandardNormal));
                    let draw = &mean + &l * eta;
                    out.row_mut(s).copy_from(&draw.transpose());
                }
                Ok(out)
            }
            VarMode::Ridge => self.posterior.as_ref().unwrap().forecast_draws(z, n_draws, rng),
        }
    }
}
