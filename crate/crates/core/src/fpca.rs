//! Functional PCA of a panel of LQD curves: centering, eigenbasis and
//! factor scores via SVD of the centered panel.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::distribution::{LqdCurve, TauGrid};
use crate::error::{Error, Result};

/// A time-indexed panel of LQD curves (rows = periods).
#[derive(Debug, Clone)]
pub struct LqdPanel {
    pub tau_grid: TauGrid,
    /// T x n_tau matrix of LQD values.
    pub curves: DMatrix<f64>,
    pub periods: Vec<i32>,
}

impl LqdPanel {
    pub fn new(tau_grid: TauGrid, curves: DMatrix<f64>, periods: Vec<i32>) -> Result<Self> {
        if curves.nrows() != periods.len() {
            return Err(Error::data(format!(
                "panel rows ({}) do not match period count ({})",
                curves.nrows(),
                periods.len()
            )));
        }
        if curves.ncols() != tau_grid.n_tau() {
            return Err(Error::data(format!(
                "panel columns ({}) do not match tau grid ({})",
                curves.ncols(),
                tau_grid.n_tau()
            )));
        }
        if curves.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("panel contains non-finite values"));
        }
        Ok(LqdPanel { tau_grid, curves, periods })
    }

    pub fn from_curves(curves: &[LqdCurve], periods: Vec<i32>) -> Result<Self> {
        if curves.is_empty() {
            return Err(Error::data("empty curve collection"));
        }
        let tau = *curves[0].tau_grid();
        if curves.iter().any(|c| c.tau_grid() != &tau) {
            return Err(Error::data("curves must share one tau grid"));
        }
        let mat = DMatrix::from_fn(curves.len(), tau.n_tau(), |t, i| curves[t].values()[i]);
        LqdPanel::new(tau, mat, periods)
    }

    pub fn row_curve(&self, t: usize) -> LqdCurve {
        LqdCurve::new(self.tau_grid, self.curves.row(t).iter().copied().collect())
            .expect("panel rows are finite")
    }
}

/// Mean curve, orthonormal eigenfunctions, and singular values of a panel.
#[derive(Debug, Clone)]
pub struct FpcaBasis {
    pub tau_grid: TauGrid,
    pub mean_curve: DVector<f64>,
    /// K x n_tau, rows orthonormal under the plain dot product.
    pub eigenfunctions: DMatrix<f64>,
    /// Nonincreasing singular values of the retained components.
    pub singular_values: Vec<f64>,
    /// Total squared Frobenius mass of the centered panel.
    pub total_variance: f64,
}

impl FpcaBasis {
    pub fn k(&self) -> usize {
        self.eigenfunctions.nrows()
    }

    /// LQD curve implied by one score vector: mean + h' f.
    pub fn curve_from_scores(&self, scores: &[f64]) -> Result<LqdCurve> {
        if scores.len() != self.k() {
            return Err(Error::data(format!(
                "score length {} does not match basis K {}",
                scores.len(),
                self.k()
            )));
        }
        let mut vals = self.mean_curve.clone();
        for (k, s) in scores.iter().enumerate() {
            vals.axpy(*s, &self.eigenfunctions.row(k).transpose(), 1.0);
        }
        LqdCurve::new(self.tau_grid, vals.iter().copied().collect())
    }
}

/// Factor scores per period.
#[derive(Debug, Clone)]
pub struct FactorSeries {
    /// T x K matrix of scores.
    pub scores: DMatrix<f64>,
    pub periods: Vec<i32>,
}

impl FactorSeries {
    pub fn k(&self) -> usize {
        self.scores.ncols()
    }

    pub fn len(&self) -> usize {
        self.scores.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.nrows() == 0
    }
}

/// Splits a panel into its per-τ time mean and the centered matrix.
pub fn center_panel(panel: &LqdPanel) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let t = panel.curves.nrows();
    if t < 2 {
        return Err(Error::data(format!("centering requires T >= 2 periods, got {t}")));
    }
    let mean = panel.curves.row_mean().transpose();
    let mut centered = panel.curves.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    Ok((mean, centered))
}

/// Top-K SVD of the centered panel.
///
/// Computed through the symmetric eigendecomposition of the smaller Gram
/// matrix. Eigenfunction signs are fixed so each one's entry of largest
/// magnitude is positive.
pub fn fpca_decompose(
    tau_grid: TauGrid,
    mean_curve: DVector<f64>,
    centered: &DMatrix<f64>,
    periods: Vec<i32>,
    k: usize,
) -> Result<(FpcaBasis, FactorSeries)> {
    let (t, n) = (centered.nrows(), centered.ncols());
    if k == 0 || k > t.min(n) {
        return Err(Error::config(format!("K = {k} must lie in 1..=min(T, n_tau) = {}", t.min(n))));
    }
    let total_variance: f64 = centered.iter().map(|v| v * v).sum();
    if total_variance <= 0.0 {
        return Err(Error::numerical("centered panel is identically zero"));
    }

    // eigen of the smaller Gram matrix; singular values are sqrt(eigenvalues)
    let use_rows = t <= n;
    let gram = if use_rows {
        centered * centered.transpose()
    } else {
        centered.transpose() * centered
    };
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let tol = eig.eigenvalues[order[0]].max(0.0) * 1e-12;
    let rank = order.iter().filter(|&&i| eig.eigenvalues[i] > tol).count();
    if k > rank {
        return Err(Error::numerical(format!(
            "K = {k} exceeds the numerical rank {rank} of the centered panel"
        )));
    }

    let mut eigenfunctions = DMatrix::zeros(k, n);
    let mut singular_values = Vec::with_capacity(k);
    for (kk, &idx) in order.iter().take(k).enumerate() {
        let s = eig.eigenvalues[idx].max(0.0).sqrt();
        singular_values.push(s);
        let v: DVector<f64> = if use_rows {
            // right singular vector from the left one: v = C' u / s
            let u = eig.eigenvectors.column(idx);
            centered.transpose() * u / s
        } else {
            eig.eigenvectors.column(idx).into_owned()
        };
        let mut v = v;
        v /= v.norm();
        // sign convention: largest-magnitude entry positive
        let imax = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap();
        if v[imax] < 0.0 {
            v = -v;
        }
        eigenfunctions.row_mut(kk).copy_from(&v.transpose());
    }

    let scores = centered * eigenfunctions.transpose();
    let basis = FpcaBasis { tau_grid, mean_curve, eigenfunctions, singular_values, total_variance };
    Ok((basis, FactorSeries { scores, periods }))
}

/// End-to-end FPCA of an [`LqdPanel`]: center then decompose.
pub fn fpca_of_panel(panel: &LqdPanel, k: usize) -> Result<(FpcaBasis, FactorSeries)> {
    let (mean, centered) = center_panel(panel)?;
    fpca_decompose(panel.tau_grid, mean, &centered, panel.periods.clone(), k)
}

/// Rebuilds the rank-K panel `mean + scores * eigenfunctions`.
pub fn reconstruct(basis: &FpcaBasis, scores: &FactorSeries) -> Result<LqdPanel> {
    if scores.k() != basis.k() {
        return Err(Error::data(format!(
            "score width {} does not match basis K {}",
            scores.k(),
            basis.k()
        )));
    }
    let mut curves = &scores.scores * &basis.eigenfunctions;
    for mut row in curves.row_iter_mut() {
        row += basis.mean_curve.transpose();
    }
    LqdPanel::new(basis.tau_grid, curves, scores.periods.clone())
}

/// Cumulative explained-variance fractions `s_k^2 / total`.
pub fn explained_variance(basis: &FpcaBasis) -> Result<Vec<f64>> {
    if basis.singular_values.iter().all(|s| *s <= 0.0) || basis.total_variance <= 0.0 {
        return Err(Error::numerical("no positive singular values"));
    }
    let mut acc = 0.0;
    Ok(basis
        .singular_values
        .iter()
        .map(|s| {
            acc += s * s / basis.total_variance;
            acc.min(1.0)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;

    fn random_panel(t: usize, n: usize, seed: u64) -> LqdPanel {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let curves = DMatrix::from_fn(t, n, |_, _| rng.gen::<f64>() - 0.5);
        LqdPanel::new(TauGrid::new(0.01, n).unwrap(), curves, (0..t as i32).collect()).unwrap()
    }

    #[test]
    fn centering_identities() {
        let tau = TauGrid::new(0.01, 50).unwrap();
        // identical curves -> centered all zeros
        let row: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let curves = DMatrix::from_fn(4, 50, |_, i| row[i]);
        let panel = LqdPanel::new(tau, curves, vec![0, 1, 2, 3]).unwrap();
        let (_, centered) = center_panel(&panel).unwrap();
        assert!(centered.iter().all(|v| v.abs() < 1e-12));

        // mirror-image pair: mean zero, centered equals originals
        let curves = DMatrix::from_fn(2, 50, |t, i| if t == 0 { row[i] } else { -row[i] });
        let panel = LqdPanel::new(tau, curves.clone(), vec![0, 1]).unwrap();
        let (mean, centered) = center_panel(&panel).unwrap();
        assert!(mean.iter().all(|v| v.abs() < 1e-14));
        assert!((centered - curves).iter().all(|v| v.abs() < 1e-14));

        // random panel: column means vanish
        let panel = random_panel(10, 50, 5);
        let (_, centered) = center_panel(&panel).unwrap();
        for j in 0..50 {
            assert!(centered.column(j).sum().abs() < 1e-12);
        }

        // T < 2 errors
        let one = LqdPanel::new(tau, DMatrix::zeros(1, 50), vec![0]).unwrap();
        assert!(center_panel(&one).is_err());
    }

    #[test]
    fn rank_one_panel_is_exact() {
        let tau = TauGrid::new(0.01, 40).unwrap();
        let u: Vec<f64> = (0..6).map(|t| t as f64 - 2.5).collect();
        let v: Vec<f64> = (0..40).map(|i| ((i as f64) * 0.3).cos()).collect();
        let curves = DMatrix::from_fn(6, 40, |t, i| u[t] * v[i]);
        let panel = LqdPanel::new(tau, curves, (0..6).collect()).unwrap();
        let (basis, scores) = fpca_of_panel(&panel, 1).unwrap();
        let rec = reconstruct(&basis, &scores).unwrap();
        let err = (&rec.curves - &panel.curves).norm();
        assert!(err < 1e-10, "rank-1 reconstruction error {err}");
        let ev = explained_variance(&basis).unwrap();
        assert_abs_diff_eq!(ev[0], 1.0, epsilon = 1e-12);
        // K exceeding rank errors
        assert!(fpca_of_panel(&panel, 2).is_err());
    }

    #[test]
    fn full_rank_reconstruction_is_exact() {
        // centering costs one rank, so the full decomposition has T-1
        // components and already reconstructs exactly
        let panel = random_panel(8, 30, 7);
        let (basis, scores) = fpca_of_panel(&panel, 7).unwrap();
        let rec = reconstruct(&basis, &scores).unwrap();
        assert!((&rec.curves - &panel.curves).norm() < 1e-8);
        assert!(fpca_of_panel(&panel, 8).is_err());
    }

    #[test]
    fn eckart_young_error_identity() {
        let panel = random_panel(12, 60, 9);
        let (mean, centered) = center_panel(&panel).unwrap();
        let (full, _) =
            fpca_decompose(panel.tau_grid, mean.clone(), &centered, panel.periods.clone(), 11)
                .unwrap();
        for k in [1usize, 3, 6] {
            let (basis, scores) =
                fpca_decompose(panel.tau_grid, mean.clone(), &centered, panel.periods.clone(), k)
                    .unwrap();
            let rec = reconstruct(&basis, &scores).unwrap();
            let err = (&rec.curves - &panel.curves).norm();
            let expected: f64 =
                full.singular_values[k..].iter().map(|s| s * s).sum::<f64>().sqrt();
            assert_abs_diff_eq!(err, expected, epsilon = 1e-8);
        }
    }

    #[test]
    fn reconstruction_error_nonincreasing_in_k() {
        let panel = random_panel(10, 40, 13);
        let mut prev = f64::INFINITY;
        for k in 1..=9 {
            let (basis, scores) = fpca_of_panel(&panel, k).unwrap();
            let rec = reconstruct(&basis, &scores).unwrap();
            let err = (&rec.curves - &panel.curves).norm();
            assert!(err <= prev + 1e-12);
            prev = err;
        }
    }

    #[test]
    fn orthonormality_and_score_orthogonality() {
        let panel = random_panel(15, 80, 21);
        let (basis, scores) = fpca_of_panel(&panel, 5).unwrap();
        let hh = &basis.eigenfunctions * basis.eigenfunctions.transpose();
        for i in 0..5 {
            for j in 0..5 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(hh[(i, j)], expected, epsilon = 1e-8);
            }
        }
        let ss = scores.scores.transpose() * &scores.scores;
        for i in 0..5 {
            for j in 0..5 {
                if i != j {
                    assert!(ss[(i, j)].abs() < 1e-8, "scores not orthogonal: {}", ss[(i, j)]);
                }
            }
        }
        // singular values nonincreasing
        for w in basis.singular_values.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn sign_flip_leaves_reconstruction_unchanged() {
        let panel = random_panel(9, 35, 3);
        let (mut basis, mut scores) = fpca_of_panel(&panel, 3).unwrap();
        let rec0 = reconstruct(&basis, &scores).unwrap();
        for r in 0..basis.eigenfunctions.ncols() {
            basis.eigenfunctions[(1, r)] = -basis.eigenfunctions[(1, r)];
        }
        for t in 0..scores.scores.nrows() {
            scores.scores[(t, 1)] = -scores.scores[(t, 1)];
        }
        let rec1 = reconstruct(&basis, &scores).unwrap();
        assert_eq!(rec0.curves, rec1.curves);
    }

    #[test]
    fn zero_scores_reproduce_the_mean() {
        let panel = random_panel(6, 25, 17);
        let (basis, _) = fpca_of_panel(&panel, 2).unwrap();
        let zeros = FactorSeries { scores: DMatrix::zeros(3, 2), periods: vec![0, 1, 2] };
        let rec = reconstruct(&basis, &zeros).unwrap();
        for row in rec.curves.row_iter() {
            for (a, b) in row.iter().zip(basis.mean_curve.iter()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-14);
            }
        }
        // unit score on component 1 -> mean + h1
        let unit =
            FactorSeries { scores: DMatrix::from_row_slice(1, 2, &[1.0, 0.0]), periods: vec![0] };
        let rec = reconstruct(&basis, &unit).unwrap();
        for i in 0..25 {
            assert_abs_diff_eq!(
                rec.curves[(0, i)],
                basis.mean_curve[i] + basis.eigenfunctions[(0, i)],
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn explained_variance_shapes() {
        // two equal singular values -> [0.5, 1.0]
        let tau = TauGrid::new(0.01, 8).unwrap();
        let mut curves = DMatrix::zeros(4, 8);
        // two orthogonal directions with equal energy
        curves[(0, 0)] = 1.0;
        curves[(1, 0)] = -1.0;
        curves[(2, 1)] = 1.0;
        curves[(3, 1)] = -1.0;
        let panel = LqdPanel::new(tau, curves, (0..4).collect()).unwrap();
        let (basis, _) = fpca_of_panel(&panel, 2).unwrap();
        let ev = explained_variance(&basis).unwrap();
        assert_abs_diff_eq!(ev[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(ev[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn explained_variance_matches_covariance_eigenvalues() {
        let panel = random_panel(20, 50, 31);
        let (_, centered) = center_panel(&panel).unwrap();
        let (basis, _) = fpca_of_panel(&panel, 4).unwrap();
        let ev = explained_variance(&basis).unwrap();
        // independent oracle: eigenvalues of the n_tau x n_tau covariance
        let cov = centered.transpose() * &centered;
        let eig = SymmetricEigen::new(cov);
        let mut lam: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        lam.sort_by(|a, b| b.total_cmp(a));
        let total: f64 = lam.iter().sum();
        let mut acc = 0.0;
        for (k, e) in ev.iter().enumerate() {
            acc += lam[k] / total;
            assert_abs_diff_eq!(*e, acc, epsilon = 1e-10);
        }
    }

    #[test]
    fn synthetic_rank3_panel_recovers_structure() {
        // 3 orthogonal components + small noise, mirroring the MC setup
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let t = 60;
        let n = 200;
        let tau = TauGrid::new(0.005, n).unwrap();
        let mut h = DMatrix::zeros(3, n);
        for i in 0..n {
            let x = i as f64 / n as f64;
            h[(0, i)] = (std::f64::consts::PI * x).sin();
            h[(1, i)] = (2.0 * std::f64::consts::PI * x).cos();
            h[(2, i)] = (3.0 * std::f64::consts::PI * x).sin();
        }
        for k in 0..3 {
            let norm = h.row(k).norm();
            for i in 0..n {
                h[(k, i)] /= norm;
            }
        }
        let scales = [8.0, 4.0, 2.0];
        let mut curves = DMatrix::zeros(t, n);
        for row in 0..t {
            for k in 0..3 {
                let f: f64 = rng.sample::<f64, _>(rand_distr::StandardNormal) * scales[k];
                for i in 0..n {
                    curves[(row, i)] += f * h[(k, i)];
                }
            }
            for i in 0..n {
                curves[(row, i)] += rng.sample::<f64, _>(rand_distr::StandardNormal) * 0.01;
            }
        }
        let panel = LqdPanel::new(tau, curves, (0..t as i32).collect()).unwrap();
        let (basis, _) = fpca_of_panel(&panel, 3).unwrap();
        let ev = explained_variance(&basis).unwrap();
        assert!(ev[2] > 0.99, "explained variance {:?}", ev);
    }
}
