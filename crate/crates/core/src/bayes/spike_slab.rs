//! Spike-and-slab group-lasso Gibbs sampler for the triangularized
//! SUR-MIDAS model.
//!
//! Each equation i is rewritten as
//! `f_it = z_t' theta_i + alpha_i1 u_1t + ... + alpha_i,i-1 u_i-1,t + eps_it`
//! with independent `eps_it ~ N(0, sigma_i^2)`. Group coefficients carry
//! the mixture prior `(1 - pi_i0) N(0, sigma_i^2 tau_ij^2 I) + pi_i0 δ0`
//! with `tau_ij^2 ~ Gamma((g_ij+1)/2, lambda_ij^2/2)` and
//! `pi_i0 ~ Beta(c, d)`. Sampling theta_i uses the stacked equations
//! i..K of the triangular form, so each group draw conditions on the
//! cross-equation information carried by the alpha terms.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, InverseGaussian, StandardNormal};

use crate::bayes::{ar1_residual_variance, omega_from_triangular, sample_inv_gamma};
use crate::error::{Error, Result};
use crate::midas::{GroupLayout, MidasDesign};

/// Divergence guard: any sigma_i^2 above this aborts the run.
const SIGMA2_DIVERGENCE: f64 = 1e8;

/// Sweep counts and seed for one chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GibbsConfig {
    /// Total sweeps, including burn-in.
    pub n_draws: usize,
    pub n_burn: usize,
    pub thin: usize,
    pub seed: u64,
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_draws <= self.n_burn {
            return Err(Error::config(format!(
                "n_draws ({}) must exceed n_burn ({})",
                self.n_draws, self.n_burn
            )));
        }
        if self.thin == 0 {
            return Err(Error::config("thin must be >= 1"));
        }
        Ok(())
    }
}

impl Default for GibbsConfig {
    fn default() -> Self {
        GibbsConfig { n_draws: 2000, n_burn: 500, thin: 1, seed: 0 }
    }
}

/// Degrees of freedom rule for the sigma_i^2 priors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum V0Rule {
    /// One v0 for all equations; the implied error covariance prior is
    /// Inverse-Wishart(S, v0). Requires v0 > K.
    Global(f64),
    /// The per-equation rule v_{0i} = 1 + i/2 (1-based i). Only valid
    /// when every implied shape (v_{0i} + i - K)/2 stays positive.
    PerEquation,
}

/// Handling of the group-lasso penalties lambda_ij^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaMode {
    /// Conjugate Gamma(a2, b2) prior with exact conditional updates.
    HierarchicalGamma { a2: f64, b2: f64 },
    /// Empirical-Bayes stub: Robbins-Monro update of log lambda^2 with
    /// step (sweep+1)^(-step_exponent), during burn-in only.
    AdaptiveStub { step_exponent: f64 },
}

/// Prior configuration of the spike-and-slab sampler.
#[derive(Debug, Clone)]
pub struct SpikeSlabPrior {
    pub v0: V0Rule,
    /// Diagonal of S; `None` fits an AR(1) to each factor and uses the
    /// residual variances.
    pub s_scale: Option<Vec<f64>>,
    /// Beta prior weight on exclusion; `None` uses c = (1 + 1/G) G^nu.
    pub c: Option<f64>,
    pub d: f64,
    pub nu_exponent: f64,
    pub lambda_mode: LambdaMode,
    /// Absolute prior variance of the always-included intercepts.
    pub intercept_variance: f64,
    pub gibbs: GibbsConfig,
}

impl SpikeSlabPrior {
    /// Defaults for a K-factor system: v0 = K + 5, AR(1) scales,
    /// c = (1 + 1/G) G, hierarchical Gamma(0.1, 0.1) penalties.
    pub fn default_for(k: usize, seed: u64) -> Self {
        SpikeSlabPrior {
            v0: V0Rule::Global(k as f64 + 5.0),
            s_scale: None,
            c: None,
            d: 1.0,
            nu_exponent: 1.0,
            lambda_mode: LambdaMode::HierarchicalGamma { a2: 0.1, b2: 0.1 },
            intercept_variance: 100.0,
            gibbs: GibbsConfig { seed, ..GibbsConfig::default() },
        }
    }
}

/// Retained posterior draws of the sampler.
#[derive(Debug, Clone)]
pub struct SurMidasDraws {
    /// Per draw: p x K coefficient matrix (excluded groups exactly zero).
    pub theta: Vec<DMatrix<f64>>,
    /// Per draw: free lower-triangular entries, rows i = 1..K-1, packed
    /// as [alpha_10; alpha_20, alpha_21; ...].
    pub alpha: Vec<Vec<f64>>,
    pub sigma2: Vec<Vec<f64>>,
    /// Per draw: K x G matrices flattened row-major.
    pub tau2: Vec<Vec<f64>>,
    pub lambda2: Vec<Vec<f64>>,
    pub gamma: Vec<Vec<bool>>,
    pub pi0: Vec<Vec<f64>>,
    pub intercepts: Vec<Vec<f64>>,
    pub k: usize,
    pub n_groups: usize,
    pub layout: GroupLayout,
}

impl SurMidasDraws {
    pub fn n_retained(&self) -> usize {
        self.theta.len()
    }

    /// Posterior mean inclusion probability per (equation, group).
    pub fn inclusion_probabilities(&self) -> DMatrix<f64> {
        let mut probs = DMatrix::zeros(self.k, self.n_groups);
        for g in &self.gamma {
            for i in 0..self.k {
                for j in 0..self.n_groups {
                    if g[i * self.n_groups + j] {
                        probs[(i, j)] += 1.0;
                    }
                }
            }
        }
        probs / self.n_retained() as f64
    }

    /// Error covariance implied by draw `s`.
    pub fn omega(&self, s: usize) -> DMatrix<f64> {
        let mut alpha = DMatrix::zeros(self.k, self.k);
        let mut pos = 0usize;
        for i in 1..self.k {
            for c in 0..i {
                alpha[(i, c)] = self.alpha[s][pos];
                pos += 1;
            }
        }
        omega_from_triangular(&alpha, &self.sigma2[s])
    }

    pub fn theta_mean(&self) -> DMatrix<f64> {
        let mut acc = DMatrix::zeros(self.theta[0].nrows(), self.theta[0].ncols());
        for t in &self.theta {
            acc += t;
        }
        acc / self.theta.len() as f64
    }
}

/// The sampler state. Fields are public so oracle tests can pin parts of
/// the state and drive individual steps.
pub struct GibbsSampler {
    // data
    pub z: DMatrix<f64>,
    pub y: DMatrix<f64>,
    group_cols: Vec<std::ops::Range<usize>>,
    group_active: Vec<bool>,
    ztz: Vec<DMatrix<f64>>,
    pub t_obs: usize,
    pub k: usize,
    pub n_groups: usize,
    layout: GroupLayout,
    // resolved prior quantities
    pub v0: Vec<f64>,
    pub s2: Vec<f64>,
    pub c: f64,
    pub d: f64,
    lambda_mode: LambdaMode,
    intercept_variance: f64,
    // state
    pub theta: DMatrix<f64>,
    pub gamma: Vec<bool>,
    pub alpha: DMatrix<f64>,
    pub sigma2: Vec<f64>,
    pub tau2: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub pi0: Vec<f64>,
    pub intercepts: Vec<f64>,
    // residual caches: u = y - z theta - intercepts, eps = u A~'
    u: DMatrix<f64>,
    eps: DMatrix<f64>,
    pub rng: ChaCha8Rng,
}

impl GibbsSampler {
    pub fn new(design: &MidasDesign, prior: &SpikeSlabPrior) -> Result<Self> {
        prior.gibbs.validate()?;
        let z = design.z.clone();
        let y = design.targets.clone();
        let (t_obs, k) = (y.nrows(), y.ncols());
        if t_obs < 10 {
            return Err(Error::data(format!("gibbs_run requires T >= 10 usable periods, got {t_obs}")));
        }
        design.layout.validate()?;
        let n_groups = design.layout.n_groups();

        let v0 = match prior.v0 {
            V0Rule::Global(v) => vec![v; k],
            V0Rule::PerEquation => (1..=k).map(|i| 1.0 + i as f64 / 2.0).collect(),
        };
        for (i, v) in v0.iter().enumerate() {
            let shape = (v + (i + 1) as f64 - k as f64) / 2.0;
            if shape <= 0.0 {
                return Err(Error::config(format!(
                    "v0 rule gives nonpositive Inverse-Gamma shape {shape} in equation {}",
                    i + 1
                )));
            }
        }
        let s2 = match &prior.s_scale {
            Some(s) => {
                if s.len() != k || s.iter().any(|v| v.is_nan() || *v <= 0.0) {
                    return Err(Error::config("s_scale must hold K positive values"));
                }
                s.clone()
            }
            None => (0..k)
                .map(|i| {
                    let col: Vec<f64> = y.column(i).iter().copied().collect();
                    ar1_residual_variance(&col)
                })
                .collect(),
        };
        let g_f = n_groups as f64;
        let c = prior.c.unwrap_or((1.0 + 1.0 / g_f) * g_f.powf(prior.nu_exponent));
        if c.is_nan() || c <= 0.0 || prior.d.is_nan() || prior.d <= 0.0 {
            return Err(Error::config("Beta hyperparameters c, d must be positive"));
        }
        if prior.intercept_variance <= 0.0 {
            return Err(Error::config("intercept variance must be positive"));
        }

        let group_cols: Vec<_> = design.layout.groups.iter().map(|g| g.cols.clone()).collect();
        let group_active: Vec<bool> =
            design.layout.groups.iter().map(|g| !g.degenerate).collect();
        let ztz: Vec<DMatrix<f64>> = group_cols
            .iter()
            .map(|r| {
                let zj = z.columns(r.start, r.len());
                zj.transpose() * zj
            })
            .collect();

        let mut sampler = GibbsSampler {
            z,
            y,
            group_cols,
            group_active: group_active.clone(),
            ztz,
            t_obs,
            k,
            n_groups,
            layout: design.layout.clone(),
            v0,
            s2: s2.clone(),
            c,
            d: prior.d,
            lambda_mode: prior.lambda_mode,
            intercept_variance: prior.intercept_variance,
            theta: DMatrix::zeros(design.n_cols(), k),
            gamma: (0..k * n_groups)
                .map(|idx| group_active[idx % n_groups])
                .collect(),
            alpha: DMatrix::zeros(k, k),
            sigma2: s2,
            tau2: vec![1.0; k * n_groups],
            lambda2: vec![1.0; k * n_groups],
            pi0: vec![0.5; k],
            intercepts: vec![0.0; k],
            u: DMatrix::zeros(t_obs, k),
            eps: DMatrix::zeros(t_obs, k),
            rng: ChaCha8Rng::seed_from_u64(prior.gibbs.seed),
        };
        // start all groups excluded so theta = 0 is consistent
        for g in sampler.gamma.iter_mut() {
            *g = false;
        }
        sampler.refresh_residuals();
        Ok(sampler)
    }

    pub fn layout(&self) -> &GroupLayout {
        &self.layout
    }

    pub fn is_group_active(&self, j: usize) -> bool {
        self.group_active[j]
    }

    fn gidx(&self, i: usize, j: usize) -> usize {
        i * self.n_groups + j
    }

    /// Recomputes `u` and `eps` from the current state.
    pub fn refresh_residuals(&mut self) {
        self.u = &self.y - &self.z * &self.theta;
        for i in 0..self.k {
            let icpt = self.intercepts[i];
            for v in self.u.column_mut(i).iter_mut() {
                *v -= icpt;
            }
        }
        for i in 0..self.k {
            let mut col = self.u.column(i).clone_owned();
            for cidx in 0..i {
                col.axpy(-self.alpha[(i, cidx)], &self.u.column(cidx).clone_owned(), 1.0);
            }
            self.eps.column_mut(i).copy_from(&col);
        }
    }

    /// Column i of A~ restricted to rows i..K: [1, -alpha_{i+1,i}, ...].
    fn a_column(&self, i: usize) -> Vec<f64> {
        let mut a = Vec::with_capacity(self.k - i);
        a.push(1.0);
        for r in i + 1..self.k {
            a.push(-self.alpha[(r, i)]);
        }
        a
    }

    /// Draws the intercept of equation `i` (always included, absolute
    /// prior variance `intercept_variance`).
    pub fn sample_intercept(&mut self, i: usize) {
        let a = self.a_column(i);
        let mut prec = 1.0 / self.intercept_variance;
        let mut num = 0.0;
        for (kk, ak) in a.iter().enumerate() {
            let col = i + kk;
            let w = ak / self.sigma2[col];
            // f~_k = eps_k + a_k * 1 * icpt
            num += w * (self.eps.column(col).sum() + ak * self.intercepts[i] * self.t_obs as f64);
            prec += ak * ak / self.sigma2[col] * self.t_obs as f64;
        }
        let mean = num / prec;
        let new = mean + self.rng.sample::<f64, _>(StandardNormal) / prec.sqrt();
        let delta = self.intercepts[i] - new;
        for (kk, ak) in a.iter().enumerate() {
            let col = i + kk;
            for v in self.eps.column_mut(col).iter_mut() {
                *v += ak * delta;
            }
        }
        for v in self.u.column_mut(i).iter_mut() {
            *v += delta;
        }
        self.intercepts[i] = new;
    }

    /// Draws `(gamma_ij, theta_ij)` from the stacked triangular
    /// conditional for equation `i`, group `j`.
    pub fn sample_theta_group(&mut self, i: usize, j: usize) -> Result<()> {
        if !self.group_active[j] {
            return Ok(());
        }
        let cols = self.group_cols[j].clone();
        let g = cols.len();
        let a = self.a_column(i);
        let tau2 = self.tau2[self.gidx(i, j)];
        let sigma_i2 = self.sigma2[i];

        // s2fac = sum_k a_k^2 sigma_i^2 / sigma_k^2 and the weighted
        // partial-residual vector sum_k w_k eps_k with w_k = a_k sigma_i^2 / sigma_k^2
        let mut s2fac = 0.0;
        let mut wres: DVector<f64> = DVector::zeros(self.t_obs);
        for (kk, ak) in a.iter().enumerate() {
            let col = i + kk;
            let w = ak * sigma_i2 / self.sigma2[col];
            s2fac += ak * w;
            wres.axpy(w, &self.eps.column(col).clone_owned(), 1.0);
        }

        let zj = self.z.columns(cols.start, g);
        let theta_cur = self.theta.rows(cols.start, g).column(i).clone_owned();
        // C = Z_j' (wres + s2fac Z_j theta_cur)
        let mut cvec = zj.transpose() * &wres;
        cvec.gemv(s2fac, &self.ztz[j], &theta_cur, 1.0);

        let mut p = self.ztz[j].clone() * s2fac;
        for dd in 0..g {
            p[(dd, dd)] += 1.0 / tau2;
        }
        let chol = Cholesky::new(p)
            .ok_or_else(|| Error::numerical("theta-group precision not positive definite"))?;
        let l = chol.l();
        // half = L^-1 C
        let mut half = cvec.clone();
        l.solve_lower_triangular_mut(&mut half);
        let quad = half.dot(&half);
        let logdet: f64 = (0..g).map(|dd| l[(dd, dd)].ln() * 2.0).sum();

        let pi0 = self.pi0[i];
        let include = if pi0 <= 0.0 {
            true
        } else if pi0 >= 1.0 {
            false
        } else {
            // log of (1-pi0)/pi0 * marginal slab/spike ratio
            let log_odds = ((1.0 - pi0) / pi0).ln() - 0.5 * g as f64 * tau2.ln() - 0.5 * logdet
                + quad / (2.0 * sigma_i2);
            let p_include = 1.0 / (1.0 + (-log_odds).exp());
            self.rng.gen::<f64>() < p_include
        };

        let theta_new = if include {
            // mean = L^-T half, noise = sigma_i L^-T z
            let mut mean = half;
            l.transpose().solve_upper_triangular_mut(&mut mean);
            let mut noise = DVector::from_fn(g, |_, _| self.rng.sample::<f64, _>(StandardNormal));
            l.transpose().solve_upper_triangular_mut(&mut noise);
            mean + noise * sigma_i2.sqrt()
        } else {
            DVector::zeros(g)
        };

        // update caches: delta = Z_j (theta_cur - theta_new)
        let delta = zj * (&theta_cur - &theta_new);
        for (kk, ak) in a.iter().enumerate() {
            let col = i + kk;
            self.eps.column_mut(col).axpy(*ak, &delta, 1.0);
        }
        self.u.column_mut(i).axpy(1.0, &delta, 1.0);
        self.theta.rows_mut(cols.start, g).column_mut(i).copy_from(&theta_new);
        let idx = self.gidx(i, j);
        self.gamma[idx] = include;
        Ok(())
    }

    /// Draws `alpha_{i,.}` (the regression of u_i on preceding
    /// residuals) and refreshes eps_i.
    pub fn sample_alpha(&mut self, i: usize) -> Result<()> {
        if i == 0 {
            return Ok(());
        }
        let upast = self.u.columns(0, i);
        let mut m = upast.transpose() * upast;
        for c in 0..i {
            m[(c, c)] += self.s2[c];
        }
        let rhs = upast.transpose() * self.u.column(i);
        let chol = Cholesky::new(m)
            .ok_or_else(|| Error::numerical("alpha precision not positive definite"))?;
        let mean = chol.solve(&rhs);
        let mut noise = DVector::from_fn(i, |_, _| self.rng.sample::<f64, _>(StandardNormal));
        chol.l().transpose().solve_upper_triangular_mut(&mut noise);
        let draw = mean + noise * self.sigma2[i].sqrt();
        for c in 0..i {
            self.alpha[(i, c)] = draw[c];
        }
        // eps_i = u_i - U_past alpha_i
        let mut col = self.u.column(i).clone_owned();
        col.gemv(-1.0, &upast.clone_owned(), &draw, 1.0);
        self.eps.column_mut(i).copy_from(&col);
        Ok(())
    }

    /// Draws every sigma_i^2 from its Inverse-Gamma conditional. Errors
    /// if any draw exceeds the divergence guard.
    pub fn sample_sigma2(&mut self) -> Result<()> {
        for i in 0..self.k {
            let mut g_included = 0.0;
            let mut theta_term = 0.0;
            for j in 0..self.n_groups {
                let idx = self.gidx(i, j);
                if self.gamma[idx] {
                    let cols = self.group_cols[j].clone();
                    g_included += cols.len() as f64;
                    let rows = self.theta.rows(cols.start, cols.len());
                    theta_term += rows.column(i).norm_squared() / self.tau2[idx];
                }
            }
            let alpha_term: f64 = (0..i).map(|c| self.s2[c] * self.alpha[(i, c)].powi(2)).sum();
            let shape = (self.t_obs as f64 + g_included - 1.0) / 2.0
                + i as f64 / 2.0
                + (self.v0[i] + (i + 1) as f64 - self.k as f64) / 2.0;
            let rate = 0.5 * self.eps.column(i).norm_squared()
                + 0.5 * theta_term
                + 0.5 * alpha_term
                + self.s2[i] / 2.0;
            self.sigma2[i] = sample_inv_gamma(shape, rate, &mut self.rng)?;
            if self.sigma2[i] > SIGMA2_DIVERGENCE {
                return Err(Error::numerical(format!(
                    "sigma2[{}] diverged to {:.3e}; the chain is unstable",
                    i + 1,
                    self.sigma2[i]
                )));
            }
        }
        Ok(())
    }

    /// Draws every tau_ij^2: Inverse-Gaussian for included groups, the
    /// Gamma prior branch for excluded ones.
    pub fn sample_tau2(&mut self) -> Result<()> {
        for i in 0..self.k {
            for j in 0..self.n_groups {
                let idx = self.gidx(i, j);
                let g = self.group_cols[j].len() as f64;
                let lambda2 = self.lambda2[idx];
                let cols = self.group_cols[j].clone();
                let norm = if self.gamma[idx] {
                    self.theta.rows(cols.start, cols.len()).column(i).norm()
                } else {
                    0.0
                };
                if norm > 1e-12 {
                    let mean = (lambda2 * self.sigma2[i]).sqrt() / norm;
                    let ig = InverseGaussian::new(mean, lambda2).map_err(|e| {
                        Error::numerical(format!("invalid Inverse-Gaussian({mean}, {lambda2}): {e:?}"))
                    })?;
                    // numerical guard: redraw nonpositive inverses
                    let mut inv = 0.0;
                    for _ in 0..100 {
                        inv = ig.sample(&mut self.rng);
                        if inv > 0.0 {
                            break;
                        }
                    }
                    if inv <= 0.0 {
                        return Err(Error::numerical("Inverse-Gaussian draws stayed nonpositive"));
                    }
                    self.tau2[idx] = 1.0 / inv;
                } else {
                    let gamma = rand_distr::Gamma::new((g + 1.0) / 2.0, 2.0 / lambda2)
                        .map_err(|e| Error::numerical(format!("invalid Gamma: {e}")))?;
                    self.tau2[idx] = gamma.sample(&mut self.rng).max(1e-300);
                }
            }
        }
        Ok(())
    }

    /// Draws pi_i0 ~ Beta(#excluded + c, #included + d) over active groups.
    pub fn sample_pi0(&mut self) -> Result<()> {
        for i in 0..self.k {
            let mut excluded = 0.0;
            let mut included = 0.0;
            for j in 0..self.n_groups {
                if !self.group_active[j] {
                    continue;
                }
                if self.gamma[self.gidx(i, j)] {
                    included += 1.0;
                } else {
                    excluded += 1.0;
                }
            }
            let beta = Beta::new(excluded + self.c, included + self.d)
                .map_err(|e| Error::numerical(format!("invalid Beta: {e}")))?;
            self.pi0[i] = beta.sample(&mut self.rng);
        }
        Ok(())
    }

    /// Updates lambda_ij^2 per the configured mode. `sweep` is the
    /// 0-based sweep index, `burning` marks the burn-in phase.
    pub fn sample_lambda2(&mut self, sweep: usize, burning: bool) -> Result<()> {
        match self.lambda_mode {
            LambdaMode::HierarchicalGamma { a2, b2 } => {
                for i in 0..self.k {
                    for j in 0..self.n_groups {
                        let idx = self.gidx(i, j);
                        let g = self.group_cols[j].len() as f64;
                        let shape = (g + 1.0) / 2.0 + a2;
                        let rate = self.tau2[idx] / 2.0 + b2;
                        let gamma = rand_distr::Gamma::new(shape, 1.0 / rate)
                            .map_err(|e| Error::numerical(format!("invalid Gamma: {e}")))?;
                        self.lambda2[idx] = gamma.sample(&mut self.rng).max(1e-300);
                    }
                }
            }
            LambdaMode::AdaptiveStub { step_exponent } => {
                if burning {
                    let step = ((sweep + 1) as f64).powf(-step_exponent);
                    for i in 0..self.k {
                        for j in 0..self.n_groups {
                            let idx = self.gidx(i, j);
                            let g = self.group_cols[j].len() as f64;
                            let score = (g + 1.0) / 2.0 - self.lambda2[idx] * self.tau2[idx] / 2.0;
                            let updated = (self.lambda2[idx].ln() + step * score).exp();
                            self.lambda2[idx] = updated.clamp(1e-6, 1e6);
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// One full sweep in the fixed step order: theta groups (equations
    /// ascending, intercept first, groups ascending), alpha, sigma2,
    /// tau2, pi0, lambda2.
    pub fn sweep(&mut self, sweep: usize, burning: bool) -> Result<()> {
        self.refresh_residuals();
        for i in 0..self.k {
            self.sample_intercept(i);
            for j in 0..self.n_groups {
                self.sample_theta_group(i, j)?;
            }
        }
        for i in 1..self.k {
            self.sample_alpha(i)?;
        }
        self.sample_sigma2()?;
        self.sample_tau2()?;
        self.sample_pi0()?;
        self.sample_lambda2(sweep, burning)?;
        Ok(())
    }

    fn record(&self, draws: &mut SurMidasDraws) {
        draws.theta.push(self.theta.clone());
        let mut alpha = Vec::with_capacity(self.k * (self.k - 1) / 2);
        for i in 1..self.k {
            for c in 0..i {
                alpha.push(self.alpha[(i, c)]);
            }
        }
        draws.alpha.push(alpha);
        draws.sigma2.push(self.sigma2.clone());
        draws.tau2.push(self.tau2.clone());
        draws.lambda2.push(self.lambda2.clone());
        draws.gamma.push(self.gamma.clone());
        draws.pi0.push(self.pi0.clone());
        draws.intercepts.push(self.intercepts.clone());
    }
}

/// Runs the burn-in and retained sweeps; deterministic given the seed.
pub fn gibbs_run(design: &MidasDesign, prior: &SpikeSlabPrior) -> Result<SurMidasDraws> {
    let mut sampler = GibbsSampler::new(design, prior)?;
    let cfg = prior.gibbs;
    let mut draws = SurMidasDraws {
        theta: Vec::new(),
        alpha: Vec::new(),
        sigma2: Vec::new(),
        tau2: Vec::new(),
        lambda2: Vec::new(),
        gamma: Vec::new(),
        pi0: Vec::new(),
        intercepts: Vec::new(),
        k: sampler.k,
        n_groups: sampler.n_groups,
        layout: sampler.layout().clone(),
    };
    for sweep in 0..cfg.n_draws {
        let burning = sweep < cfg.n_burn;
        sampler.sweep(sweep, burning)?;
        if !burning && (sweep - cfg.n_burn).is_multiple_of(cfg.thin) {
            sampler.record(&mut draws);
        }
    }
    Ok(draws)
}
