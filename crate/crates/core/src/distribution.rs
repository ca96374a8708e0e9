//! Densities on a grid, the log-quantile-density transform and its inverse,
//! kernel density estimation, and distributional summary statistics.

use crate::error::{Error, Result};

/// Floor applied to density values before logs are taken.
pub const DENSITY_FLOOR: f64 = 1e-10;

/// Sample count above which the KDE switches from the direct sum to
/// linear-binned convolution (identical kernel, O(n + grid) instead of
/// O(n * grid)).
const KDE_BINNING_THRESHOLD: usize = 100_000;

/// Number of probability points used for the Lorenz-curve integral.
const LORENZ_GRID: usize = 2001;

/// An evenly spaced support grid `[lower, upper]` with `n_points` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportGrid {
    lower: f64,
    upper: f64,
    n_points: usize,
}

impl SupportGrid {
    pub fn new(lower: f64, upper: f64, n_points: usize) -> Result<Self> {
        if !lower.is_finite() || !upper.is_finite() || lower >= upper {
            return Err(Error::config(format!(
                "support grid requires lower < upper, got [{lower}, {upper}]"
            )));
        }
        if n_points < 3 {
            return Err(Error::config(format!(
                "support grid requires n_points >= 3, got {n_points}"
            )));
        }
        Ok(SupportGrid { lower, upper, n_points })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn step(&self) -> f64 {
        (self.upper - self.lower) / (self.n_points - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.lower + (self.upper - self.lower) * i as f64 / (self.n_points - 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.point(i)).collect()
    }
}

/// A normalized probability density evaluated on a [`SupportGrid`].
///
/// Values are floored at [`DENSITY_FLOOR`] and renormalized so the
/// trapezoidal integral is 1 at construction.
#[derive(Debug, Clone)]
pub struct DensityOnGrid {
    grid: SupportGrid,
    values: Vec<f64>,
}

impl DensityOnGrid {
    /// Builds a density from (possibly unnormalized) nonnegative values.
    pub fn new(grid: SupportGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::data(format!(
                "density values ({}) do not match grid points ({})",
                values.len(),
                grid.n_points()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::data("density values must be finite and nonnegative"));
        }
        let mut values: Vec<f64> = values.iter().map(|v| v.max(DENSITY_FLOOR)).collect();
        let total = trapezoid(grid.step(), &values);
        if total <= 0.0 || !total.is_finite() {
            return Err(Error::numerical("density has non-finite or zero mass"));
        }
        for v in &mut values {
            *v /= total;
        }
        Ok(DensityOnGrid { grid, values })
    }

    pub fn grid(&self) -> &SupportGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Trapezoidal integral of the density (1 up to rounding).
    pub fn integral(&self) -> f64 {
        trapezoid(self.grid.step(), &self.values)
    }

    /// Cumulative distribution at the grid nodes, rescaled to end at 1.
    pub fn cdf(&self) -> Vec<f64> {
        let h = self.grid.step();
        let mut out = Vec::with_capacity(self.values.len());
        let mut acc = 0.0;
        out.push(0.0);
        for w in self.values.windows(2) {
            acc += 0.5 * h * (w[0] + w[1]);
            out.push(acc);
        }
        let total = *out.last().unwrap();
        for v in &mut out {
            *v /= total;
        }
        out
    }

    /// Linear interpolation of the density at `x`; 0 outside the support.
    pub fn value_at(&self, x: f64) -> f64 {
        if x < self.grid.lower() || x > self.grid.upper() {
            return 0.0;
        }
        let h = self.grid.step();
        let pos = (x - self.grid.lower()) / h;
        let i = (pos.floor() as usize).min(self.grid.n_points() - 2);
        let w = pos - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    /// Interpolates onto `target`, clamping within half a step of the
    /// support endpoints and renormalizing. Values strictly outside the
    /// support map to the density floor.
    pub fn regrid(&self, target: SupportGrid) -> Result<DensityOnGrid> {
        let slack = 0.5 * target.step().min(self.grid.step());
        let vals: Vec<f64> = (0..target.n_points())
            .map(|i| {
                let x = target.point(i);
                if x < self.grid.lower() - slack || x > self.grid.upper() + slack {
                    0.0
                } else {
                    self.value_at(x.clamp(self.grid.lower(), self.grid.upper()))
                }
            })
            .collect();
        DensityOnGrid::new(target, vals)
    }
}

/// Trapezoidal sum over an evenly spaced grid.
pub(crate) fn trapezoid(step: f64, values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let interior: f64 = values[1..values.len() - 1].iter().sum();
    step * (0.5 * values[0] + interior + 0.5 * values[values.len() - 1])
}

/// The τ grid `{delta, ..., 1-delta}` on which LQD curves are evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauGrid {
    delta: f64,
    n_tau: usize,
}

impl TauGrid {
    pub fn new(delta: f64, n_tau: usize) -> Result<Self> {
        if !(delta > 0.0 && delta < 0.5) {
            return Err(Error::config(format!("tau grid requires delta in (0, 0.5), got {delta}")));
        }
        if n_tau < 3 {
            return Err(Error::config(format!("tau grid requires n_tau >= 3, got {n_tau}")));
        }
        Ok(TauGrid { delta, n_tau })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn n_tau(&self) -> usize {
        self.n_tau
    }

    pub fn point(&self, i: usize) -> f64 {
        self.delta + (1.0 - 2.0 * self.delta) * i as f64 / (self.n_tau - 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_tau).map(|i| self.point(i)).collect()
    }
}

impl Default for TauGrid {
    /// delta = 0.005, n_tau = 1000.
    fn default() -> Self {
        TauGrid { delta: 0.005, n_tau: 1000 }
    }
}

/// Log-quantile-density values on a [`TauGrid`].
#[derive(Debug, Clone)]
pub struct LqdCurve {
    tau_grid: TauGrid,
    values: Vec<f64>,
}

impl LqdCurve {
    pub fn new(tau_grid: TauGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != tau_grid.n_tau() {
            return Err(Error::data(format!(
                "LQD values ({}) do not match tau grid ({})",
                values.len(),
                tau_grid.n_tau()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("LQD curve contains non-finite values"));
        }
        Ok(LqdCurve { tau_grid, values })
    }

    pub fn tau_grid(&self) -> &TauGrid {
        &self.tau_grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Summary statistics of a distribution.
///
/// `gini` is `None` when the mean is nonpositive or the support extends
/// below zero; `cv` is `None` when the mean is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSet {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub iqr: f64,
    pub gini: Option<f64>,
    pub cv: Option<f64>,
}

/// Named accessor used by the evaluation tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MomentField {
    Mean,
    Variance,
    Skewness,
    Kurtosis,
    Iqr,
    Gini,
    Cv,
}

impl MomentField {
    pub const ALL: [MomentField; 7] = [
        MomentField::Mean,
        MomentField::Variance,
        MomentField::Skewness,
        MomentField::Kurtosis,
        MomentField::Iqr,
        MomentField::Gini,
        MomentField::Cv,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            MomentField::Mean => "Mean",
            MomentField::Variance => "Variance",
            MomentField::Skewness => "Skewness",
            MomentField::Kurtosis => "Kurtosis",
            MomentField::Iqr => "IQR",
            MomentField::Gini => "GINI",
            MomentField::Cv => "CV",
        }
    }
}

impl MomentSet {
    pub fn get(&self, field: MomentField) -> Option<f64> {
        match field {
            MomentField::Mean => Some(self.mean),
            MomentField::Variance => Some(self.variance),
            MomentField::Skewness => Some(self.skewness),
            MomentField::Kurtosis => Some(self.kurtosis),
            MomentField::Iqr => Some(self.iqr),
            MomentField::Gini => self.gini,
            MomentField::Cv => self.cv,
        }
    }
}

/// Silverman's rule-of-thumb bandwidth `1.06 σ̂ n^(-1/5)`.
pub fn silverman_bandwidth(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    1.06 * var.sqrt() * n.powf(-0.2)
}

/// Gaussian kernel density estimate on `grid`, floored and renormalized.
///
/// `bandwidth = None` uses Silverman's rule. Above
/// [`KDE_BINNING_THRESHOLD`] samples the sum is evaluated by linear
/// binning and kernel convolution.
pub fn kde_estimate(
    samples: &[f64],
    grid: SupportGrid,
    bandwidth: Option<f64>,
) -> Result<DensityOnGrid> {
    if samples.is_empty() {
        return Err(Error::data("kde_estimate requires a nonempty sample"));
    }
    if let Some(bad) = samples
        .iter()
        .find(|x| !x.is_finite() || **x < grid.lower() || **x > grid.upper())
    {
        return Err(Error::data(format!(
            "sample value {bad} outside support [{}, {}]",
            grid.lower(),
            grid.upper()
        )));
    }
    let h = match bandwidth {
        Some(h) => h,
        None => silverman_bandwidth(samples),
    };
    if h.is_nan() || h <= 0.0 || h.is_infinite() {
        return Err(Error::config(format!(
            "bandwidth must be positive (got {h}); pass one explicitly for degenerate samples"
        )));
    }

    let n = grid.n_points();
    let step = grid.step();
    let cutoff = 8.0 * h;
    let mut vals = vec![0.0f64; n];

    if samples.len() <= KDE_BINNING_THRESHOLD {
        for &x in samples {
            let i0 = (((x - cutoff) - grid.lower()) / step).ceil().max(0.0) as usize;
            let i1 = ((((x + cutoff) - grid.lower()) / step).floor() as usize).min(n - 1);
            for (i, v) in vals.iter_mut().enumerate().take(i1 + 1).skip(i0) {
                let z = (grid.point(i) - x) / h;
                *v += (-0.5 * z * z).exp();
            }
        }
    } else {
        // linear binning then convolution with the sampled kernel
        let mut counts = vec![0.0f64; n];
        for &x in samples {
            let pos = (x - grid.lower()) / step;
            let i = (pos.floor() as usize).min(n - 2);
            let w = pos - i as f64;
            counts[i] += 1.0 - w;
            counts[i + 1] += w;
        }
        let reach = ((cutoff / step).ceil() as usize).min(n - 1);
        let kernel: Vec<f64> = (0..=reach)
            .map(|j| {
                let z = j as f64 * step / h;
                (-0.5 * z * z).exp()
            })
            .collect();
        for (i, v) in vals.iter_mut().enumerate() {
            let mut acc = counts[i] * kernel[0];
            for j in 1..=reach {
                if i >= j {
                    acc += counts[i - j] * kernel[j];
                }
                if i + j < n {
                    acc += counts[i + j] * kernel[j];
                }
            }
            *v = acc;
        }
    }

    let norm = 1.0 / (samples.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    for v in &mut vals {
        *v *= norm;
    }
    DensityOnGrid::new(grid, vals)
}

/// Quantiles of `d` at the given levels by inverting the trapezoidal CDF
/// with linear interpolation. Output is monotone in the level.
pub fn quantile_from_density(d: &DensityOnGrid, levels: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = levels.iter().find(|u| !(**u > 0.0 && **u < 1.0)) {
        return Err(Error::config(format!("quantile level {bad} outside (0, 1)")));
    }
    let cdf = d.cdf();
    Ok(levels.iter().map(|&u| invert_cdf(d.grid(), &cdf, u)).collect())
}

fn invert_cdf(grid: &SupportGrid, cdf: &[f64], u: f64) -> f64 {
    let i = cdf.partition_point(|c| *c < u).clamp(1, cdf.len() - 1);
    let (c0, c1) = (cdf[i - 1], cdf[i]);
    let x0 = grid.point(i - 1);
    if c1 > c0 {
        x0 + (u - c0) / (c1 - c0) * grid.step()
    } else {
        x0
    }
}

/// The log-quantile-density transform `q(τ) = -log f(Q(τ))` on `tau`.
pub fn lqd_from_density(d: &DensityOnGrid, tau: TauGrid) -> Result<LqdCurve> {
    let cdf = d.cdf();
    let values = (0..tau.n_tau())
        .map(|i| {
            let q = invert_cdf(d.grid(), &cdf, tau.point(i));
            -d.value_at(q).max(DENSITY_FLOOR).ln()
        })
        .collect();
    LqdCurve::new(tau, values)
}

/// Backward map from an LQD curve to a density.
///
/// The quantile function is rebuilt as `Q(τ) = anchor_lower + ∫₀^τ exp q`
/// (trapezoidal, with `q` extended constantly onto `[0, δ]` and
/// `[1-δ, 1]`), the density along it is `exp(-q(τ))`, and the result is
/// resampled onto an evenly spaced grid over the induced support.
pub fn density_from_lqd(q: &LqdCurve, anchor_lower: f64) -> Result<DensityOnGrid> {
    let n = q.tau_grid().n_tau();
    // extended nodes: 0, tau_1..tau_n, 1
    let mut taus = Vec::with_capacity(n + 2);
    taus.push(0.0);
    taus.extend((0..n).map(|i| q.tau_grid().point(i)));
    taus.push(1.0);
    let mut qv = Vec::with_capacity(n + 2);
    qv.push(q.values()[0]);
    qv.extend_from_slice(q.values());
    qv.push(q.values()[n - 1]);

    let eq: Vec<f64> = qv.iter().map(|v| v.exp()).collect();
    let mut quant = Vec::with_capacity(n + 2);
    let mut acc = anchor_lower;
    quant.push(acc);
    for i in 1..taus.len() {
        acc += 0.5 * (taus[i] - taus[i - 1]) * (eq[i] + eq[i - 1]);
        quant.push(acc);
    }
    let upper = *quant.last().unwrap();
    if !upper.is_finite() || upper <= anchor_lower {
        return Err(Error::numerical("degenerate quantile function in backward map"));
    }

    let grid = SupportGrid::new(anchor_lower, upper, n + 1)?;
    let fvals: Vec<f64> = qv.iter().map(|v| (-v).exp()).collect();
    let mut out = Vec::with_capacity(grid.n_points());
    let mut seg = 0usize;
    for i in 0..grid.n_points() {
        let x = grid.point(i);
        while seg + 2 < quant.len() && quant[seg + 1] < x {
            seg += 1;
        }
        let (x0, x1) = (quant[seg], quant[seg + 1]);
        let w = if x1 > x0 { ((x - x0) / (x1 - x0)).clamp(0.0, 1.0) } else { 0.0 };
        out.push(fvals[seg] * (1.0 - w) + fvals[seg + 1] * w);
    }
    DensityOnGrid::new(grid, out)
}

/// Inverse-hyperbolic-sine income normalization: `asinh(income / ((2/3) gdp))`.
pub fn asinh_normalize(income: f64, gdp_per_capita: f64) -> Result<f64> {
    if gdp_per_capita.is_nan() || gdp_per_capita <= 0.0 {
        return Err(Error::config(format!(
            "gdp_per_capita must be positive, got {gdp_per_capita}"
        )));
    }
    let z = income / (2.0 / 3.0 * gdp_per_capita);
    Ok(z.asinh())
}

/// Mean, central moments, IQR, Gini (via the Lorenz curve), and CV of `d`.
pub fn distribution_moments(d: &DensityOnGrid) -> MomentSet {
    let step = d.grid().step();
    let xs: Vec<f64> = d.grid().points();
    let vals = d.values();
    let total = trapezoid(step, vals);

    let raw: Vec<f64> = xs.iter().zip(vals).map(|(x, f)| x * f).collect();
    let mean = trapezoid(step, &raw) / total;
    let central = |k: i32| -> f64 {
        let integrand: Vec<f64> =
            xs.iter().zip(vals).map(|(x, f)| (x - mean).powi(k) * f).collect();
        trapezoid(step, &integrand) / total
    };
    let variance = central(2).max(0.0);
    let (skewness, kurtosis) = if variance > 0.0 {
        (central(3) / variance.powf(1.5), central(4) / (variance * variance))
    } else {
        (0.0, 0.0)
    };

    let qs = quantile_from_density(d, &[0.25, 0.75]).expect("levels in range");
    let iqr = (qs[1] - qs[0]).max(0.0);

    let gini = if d.grid().lower() >= 0.0 && mean > 0.0 {
        Some(gini_from_lorenz(d, mean))
    } else {
        None
    };
    let cv = if mean != 0.0 { Some(variance.sqrt() / mean.abs()) } else { None };

    MomentSet { mean, variance, skewness, kurtosis, iqr, gini, cv }
}

/// Gini = 1 - 2 ∫₀¹ L(p) dp with L(p) = (1/mean) ∫₀^p Q(s) ds.
fn gini_from_lorenz(d: &DensityOnGrid, mean: f64) -> f64 {
    let cdf = d.cdf();
    let m = LORENZ_GRID;
    let dp = 1.0 / (m - 1) as f64;
    // Q on the p grid (endpoints clamp to the support)
    let quant: Vec<f64> = (0..m)
        .map(|i| {
            let p = i as f64 * dp;
            if i == 0 {
                d.grid().lower()
            } else if i == m - 1 {
                d.grid().upper()
            } else {
                invert_cdf(d.grid(), &cdf, p)
            }
        })
        .collect();
    // L by cumulative trapezoid of Q, then ∫ L dp by trapezoid
    let mut lorenz = Vec::with_capacity(m);
    let mut acc = 0.0;
    lorenz.push(0.0);
    for i in 1..m {
        acc += 0.5 * dp * (quant[i] + quant[i - 1]);
        lorenz.push(acc / mean);
    }
    let integral = trapezoid(dp, &lorenz);
    1.0 - 2.0 * integral
}
