//! Shared test fixtures: an independent reference sampler for the
//! triangularized SUR model (joint GLS draw of all coefficients at
//! once), plus small statistical helpers.

#![allow(dead_code)]

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

/// Reference Gibbs sampler for the no-spike model
///
/// ```text
/// f_t = c + Theta' z_t + u_t,   u_t = A~^-1 eps_t,  eps_it ~ N(0, sigma_i^2)
/// theta_i | sigma_i^2 ~ N(0, sigma_i^2 tau2 I)
/// c_i ~ N(0, icpt_var)
/// alpha_ic | sigma_i^2 ~ N(0, sigma_i^2 / s_c^2)
/// sigma_i^2 ~ IG-conditional with the equation-indexed shape
/// ```
///
/// Theta (all equations, intercepts included) is drawn in ONE joint
/// multivariate normal step from the vectorized GLS formulas — no
/// triangular stacking, no group scans — so it is an independent route
/// to the same posterior.
pub struct ReferenceSurSampler {
    pub z: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub tau2: f64,
    pub icpt_var: f64,
    pub s2: Vec<f64>,
    pub v0: f64,
    pub k: usize,
    pub p: usize,
    pub t: usize,
    // state
    pub theta: DMatrix<f64>, // (p+1) x K, row 0 = intercept
    pub alpha: DMatrix<f64>,
    pub sigma2: Vec<f64>,
    pub rng: ChaCha8Rng,
}

impl ReferenceSurSampler {
    pub fn new(z: &DMatrix<f64>, y: &DMatrix<f64>, tau2: f64, v0: f64, seed: u64) -> Self {
        let (t, k) = (y.nrows(), y.ncols());
        let p = z.ncols();
        ReferenceSurSampler {
            z: z.clone(),
            y: y.clone(),
            tau2,
            icpt_var: 100.0,
            s2: vec![1.0; k],
            v0,
            k,
            p,
            t,
            theta: DMatrix::zeros(p + 1, k),
            alpha: DMatrix::zeros(k, k),
            sigma2: vec![1.0; k],
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn design_with_intercept(&self) -> DMatrix<f64> {
        let mut xd = DMatrix::zeros(self.t, self.p + 1);
        for r in 0..self.t {
            xd[(r, 0)] = 1.0;
        }
        xd.columns_mut(1, self.p).copy_from(&self.z);
        xd
    }

    fn omega(&self) -> DMatrix<f64> {
        let mut a = DMatrix::identity(self.k, self.k);
        for i in 1..self.k {
            for c in 0..i {
                a[(i, c)] = -self.alpha[(i, c)];
            }
        }
        let ainv = a.try_inverse().expect("unit lower triangular");
        let sig = DMatrix::from_fn(
            self.k,
            self.k,
            |i, j| if i == j { self.sigma2[i] } else { 0.0 },
        );
        &ainv * sig * ainv.transpose()
    }

    /// Joint draw of all coefficients (intercepts and thetas, all
    /// equations) from N(P^-1 b, P^-1) with
    /// P = Omega^-1 kron X'X + prior precision, b = vec(X'Y Omega^-1).
    pub fn sample_theta_joint(&mut self) {
        let xd = self.design_with_intercept();
        let xtx = xd.transpose() * &xd;
        let omega = self.omega();
        let oinv = omega.try_inverse().expect("PD covariance");
        let pa = self.p + 1;
        let dim = pa * self.k;
        let mut prec = DMatrix::zeros(dim, dim);
        for i in 0..self.k {
            for j in 0..self.k {
                for a in 0..pa {
                    for b in 0..pa {
                        prec[(i * pa + a, j * pa + b)] = oinv[(i, j)] * xtx[(a, b)];
                    }
                }
            }
        }
        for i in 0..self.k {
            prec[(i * pa, i * pa)] += 1.0 / self.icpt_var;
            for a in 1..pa {
                prec[(i * pa + a, i * pa + a)] += 1.0 / (self.sigma2[i] * self.tau2);
            }
        }
        let xty_oinv = xd.transpose() * &self.y * &oinv;
        let mut rhs = DVector::zeros(dim);
        for i in 0..self.k {
            for a in 0..pa {
                rhs[i * pa + a] = xty_oinv[(a, i)];
            }
        }
        let chol = Cholesky::new(prec).expect("posterior precision PD");
        let mean = chol.solve(&rhs);
        let mut noise = DVector::from_fn(dim, |_, _| self.rng.sample::<f64, _>(StandardNormal));
        chol.l().transpose().solve_upper_triangular_mut(&mut noise);
        let draw = mean + noise;
        for i in 0..self.k {
            for a in 0..pa {
                self.theta[(a, i)] = draw[i * pa + a];
            }
        }
    }

    fn residuals(&self) -> DMatrix<f64> {
        let xd = self.design_with_intercept();
        &self.y - xd * &self.theta
    }

    pub fn sample_alpha(&mut self) {
        let u = self.residuals();
        for i in 1..self.k {
            let upast = u.columns(0, i);
            let mut m = upast.transpose() * upast;
            for c in 0..i {
                m[(c, c)] += self.s2[c];
            }
            let rhs = upast.transpose() * u.column(i);
            let chol = Cholesky::new(m).expect("PD");
            let mean = chol.solve(&rhs);
            let mut noise =
                DVector::from_fn(i, |_, _| self.rng.sample::<f64, _>(StandardNormal));
            chol.l().transpose().solve_upper_triangular_mut(&mut noise);
            let draw = mean + noise * self.sigma2[i].sqrt();
            for c in 0..i {
                self.alpha[(i, c)] = draw[c];
            }
        }
    }

    pub fn sample_sigma2(&mut self) {
        let u = self.residuals();
        for i in 0..self.k {
            // eps_i = u_i - sum_{c<i} alpha_ic u_c
            let mut eps = u.column(i).clone_owned();
            for c in 0..i {
                eps.axpy(-self.alpha[(i, c)], &u.column(c).clone_owned(), 1.0);
            }
            let theta_norm2: f64 =
                (1..=self.p).map(|a| self.theta[(a, i)].powi(2)).sum::<f64>();
            let alpha_term: f64 = (0..i).map(|c| self.s2[c] * self.alpha[(i, c)].powi(2)).sum();
            let shape = (self.t as f64 + self.p as f64 - 1.0) / 2.0
                + i as f64 / 2.0
                + (self.v0 + (i + 1) as f64 - self.k as f64) / 2.0;
            let rate = 0.5 * eps.norm_squared()
                + 0.5 * theta_norm2 / self.tau2
                + 0.5 * alpha_term
                + self.s2[i] / 2.0;
            let g = Gamma::new(shape, 1.0 / rate).expect("valid gamma");
            self.sigma2[i] = 1.0 / g.sample(&mut self.rng).max(1e-300);
        }
    }

    pub fn sweep(&mut self) {
        self.sample_theta_joint();
        self.sample_alpha();
        self.sample_sigma2();
    }
}

/// Batch-means Monte Carlo standard error of a chain of draws.
pub fn batch_means_se(chain: &[f64], n_batches: usize) -> f64 {
    let b = chain.len() / n_batches;
    let means: Vec<f64> = (0..n_batches)
        .map(|i| chain[i * b..(i + 1) * b].iter().sum::<f64>() / b as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / n_batches as f64;
    let var =
        means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (n_batches as f64 - 1.0);
    (var / n_batches as f64).sqrt()
}

/// Simulates a small SUR data set with known triangular parameters.
pub fn simulate_sur_data(
    t: usize,
    p: usize,
    k: usize,
    omega: &DMatrix<f64>,
    seed: u64,
) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = DMatrix::from_fn(t, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let theta = DMatrix::from_fn(p, k, |_, _| rng.sample::<f64, _>(StandardNormal) * 0.5);
    let chol = Cholesky::new(omega.clone()).expect("PD omega").l().into_owned();
    let mut y = &z * &theta;
    for r in 0..t {
        let eta = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let u = &chol * eta;
        for i in 0..k {
            y[(r, i)] += u[i];
        }
    }
    (z, y, theta)
}
