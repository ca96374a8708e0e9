//! Mixed-frequency regression design: lag alignment on the high-frequency
//! clock, Almon polynomial weighting, grouping, and standardization.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fpca::FactorSeries;

/// High-frequency indicator panel aligned to low-frequency periods.
///
/// Row `m*y + q` holds sub-period `q` (0-based) of low-frequency period
/// `y`, so the last row of period `y` is `m*(y+1) - 1`.
#[derive(Debug, Clone)]
pub struct MixedFrequencyPanel {
    /// (T*m) x n_x matrix of indicator values.
    pub hf: DMatrix<f64>,
    pub m: usize,
    pub lf_periods: Vec<i32>,
    pub names: Vec<String>,
}

impl MixedFrequencyPanel {
    pub fn new(
        hf: DMatrix<f64>,
        m: usize,
        lf_periods: Vec<i32>,
        names: Vec<String>,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::config("frequency ratio m must be positive"));
        }
        if hf.nrows() != m * lf_periods.len() {
            return Err(Error::data(format!(
                "high-frequency rows ({}) must equal m*T = {}",
                hf.nrows(),
                m * lf_periods.len()
            )));
        }
        if !names.is_empty() && names.len() != hf.ncols() {
            return Err(Error::data("indicator name count does not match columns"));
        }
        if hf.iter().any(|v| !v.is_finite()) {
            return Err(Error::data("high-frequency panel contains non-finite values"));
        }
        let names = if names.is_empty() {
            (0..hf.ncols()).map(|j| format!("series_{}", j + 1)).collect()
        } else {
            names
        };
        Ok(MixedFrequencyPanel { hf, m, lf_periods, names })
    }

    pub fn n_series(&self) -> usize {
        self.hf.ncols()
    }

    /// (period label, 1-based sub-period) of a high-frequency row.
    pub fn row_date(&self, row: usize) -> (i32, u8) {
        (self.lf_periods[row / self.m], (row % self.m + 1) as u8)
    }
}

/// Lag configuration: `p_x` high-frequency lags, `p_q` low-frequency
/// factor lags, and the forecast horizon in high-frequency steps
/// (`h = h_steps / m` in low-frequency units).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LagSpec {
    pub p_x: usize,
    pub p_q: usize,
    pub h_steps: usize,
}

impl LagSpec {
    pub fn new(p_x: usize, p_q: usize, h_steps: usize) -> Result<Self> {
        if p_x == 0 {
            return Err(Error::config("p_x must be >= 1"));
        }
        Ok(LagSpec { p_x, p_q, h_steps })
    }

    /// Newest usable high-frequency row for target period index `t`
    /// (0-based): the information edge at this horizon.
    pub fn edge_row(&self, t: usize, m: usize) -> Option<usize> {
        (m * (t + 1)).checked_sub(1 + self.h_steps)
    }
}

/// Almon lag polynomial as a linear map of lag blocks, `z = W x`.
///
/// Unrestricted rows are monomials `W[i][l] = l^i`; endpoint
/// restrictions (`r_a` = 1: zero weight at the last lag, `r_a` = 2: zero
/// weight and slope) are imposed by closed-form basis reduction so every
/// coefficient vector in the reduced space satisfies them exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct AlmonTransform {
    pub p_a: usize,
    pub r_a: usize,
    /// (p_a + 1 - r_a) x p_lags weight matrix.
    pub weights: DMatrix<f64>,
}

impl AlmonTransform {
    /// Identity transform (raw lag stacking).
    pub fn identity(p_lags: usize) -> Self {
        AlmonTransform { p_a: 0, r_a: 0, weights: DMatrix::identity(p_lags, p_lags) }
    }

    pub fn n_out(&self) -> usize {
        self.weights.nrows()
    }

    pub fn p_lags(&self) -> usize {
        self.weights.ncols()
    }
}

/// Builds the Almon weight matrix for `p_lags` lags.
pub fn almon_weight_matrix(p_a: usize, r_a: usize, p_lags: usize) -> Result<AlmonTransform> {
    if r_a > 2 {
        return Err(Error::config(format!("r_a must be 0, 1, or 2, got {r_a}")));
    }
    if p_a < r_a {
        return Err(Error::config(format!(
            "p_a + 1 - r_a must be >= 1, got p_a = {p_a}, r_a = {r_a}"
        )));
    }
    if p_lags < p_a + 1 {
        return Err(Error::config(format!(
            "p_lags ({p_lags}) must be >= p_a + 1 ({})",
            p_a + 1
        )));
    }
    let p = p_lags as f64;
    let rows = p_a + 1 - r_a;
    let weights = match r_a {
        0 => DMatrix::from_fn(rows, p_lags, |i, l| ((l + 1) as f64).powi(i as i32)),
        1 => {
            // basis l^i - p^i for i = 1..p_a (zero at l = p_lags)
            DMatrix::from_fn(rows, p_lags, |i, l| {
                let i = (i + 1) as i32;
                ((l + 1) as f64).powi(i) - p.powi(i)
            })
        }
        _ => {
            // basis l^i - i p^(i-1) l + (i-1) p^i for i = 2..p_a
            // (zero value and zero slope at l = p_lags)
            DMatrix::from_fn(rows, p_lags, |i, l| {
                let i = (i + 2) as i32;
                let lf = (l + 1) as f64;
                lf.powi(i) - i as f64 * p.powi(i - 1) * lf + (i - 1) as f64 * p.powi(i)
            })
        }
    };
    Ok(AlmonTransform { p_a, r_a, weights })
}

/// One contiguous column group of the design matrix.
#[derive(Debug, Clone)]
pub struct GroupInfo {
    pub name: String,
    pub cols: std::ops::Range<usize>,
    /// All columns of the group are constant (zero after standardization).
    pub degenerate: bool,
}

/// Partition of the design columns into `G = n_x + K` groups.
#[derive(Debug, Clone)]
pub struct GroupLayout {
    pub groups: Vec<GroupInfo>,
    pub n_cols: usize,
}

impl GroupLayout {
    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn group_size(&self, j: usize) -> usize {
        self.groups[j].cols.len()
    }

    /// Asserts the ranges partition `0..n_cols` without gaps or overlaps.
    pub fn validate(&self) -> Result<()> {
        let mut next = 0usize;
        for g in &self.groups {
            if g.cols.start != next {
                return Err(Error::data(format!(
                    "group '{}' starts at {} but {} expected",
                    g.name, g.cols.start, next
                )));
            }
            next = g.cols.end;
        }
        if next != self.n_cols {
            return Err(Error::data("group ranges do not cover all design columns"));
        }
        Ok(())
    }
}

/// What a design column is built from (used by the ridge prior).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnMeta {
    /// Raw lag `lag` (1-based) of high-frequency series `series`.
    HfLag { series: usize, lag: usize },
    /// Almon-combination column `basis` of high-frequency series `series`.
    HfAlmon { series: usize, basis: usize },
    /// Raw lag `lag` (1-based) of factor `factor`.
    FactorLag { factor: usize, lag: usize },
    /// Almon-combination column of factor `factor`.
    FactorAlmon { factor: usize, basis: usize },
}

/// Per-period high-frequency lag blocks.
#[derive(Debug, Clone)]
pub struct HfLagBlocks {
    /// 0-based low-frequency indices with enough lag history.
    pub usable: Vec<usize>,
    /// One row per usable period: n_x blocks of p_x lags (lag 1 first).
    pub rows: DMatrix<f64>,
    /// Newest high-frequency row entering each block row.
    pub edges: Vec<usize>,
}

/// Lays out the lag ladder `x_{t-h-1/m}, ..., x_{t-h-p_x/m}` per period.
pub fn align_frequencies(panel: &MixedFrequencyPanel, spec: &LagSpec) -> Result<HfLagBlocks> {
    let t_total = panel.lf_periods.len();
    let n_x = panel.n_series();
    let mut usable = Vec::new();
    let mut edges = Vec::new();
    for t in 0..t_total {
        if let Some(edge) = spec.edge_row(t, panel.m) {
            if edge + 1 >= spec.p_x && edge < panel.hf.nrows() {
                usable.push(t);
                edges.push(edge);
            }
        }
    }
    if usable.is_empty() {
        let first_feasible = (spec.p_x + spec.h_steps).div_ceil(panel.m);
        return Err(Error::data(format!(
            "no period has {} high-frequency lags at horizon {}; first feasible period index is {}",
            spec.p_x, spec.h_steps, first_feasible
        )));
    }
    let mut rows = DMatrix::zeros(usable.len(), n_x * spec.p_x);
    for (r, &edge) in edges.iter().enumerate() {
        for j in 0..n_x {
            for l in 0..spec.p_x {
                rows[(r, j * spec.p_x + l)] = panel.hf[(edge - l, j)];
            }
        }
    }
    Ok(HfLagBlocks { usable, rows, edges })
}

/// Column means and standard deviations stored for forecast-time reuse.
#[derive(Debug, Clone)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    fn fit(z: &DMatrix<f64>) -> Self {
        let t = z.nrows() as f64;
        let means: Vec<f64> = (0..z.ncols()).map(|j| z.column(j).sum() / t).collect();
        let stds: Vec<f64> = (0..z.ncols())
            .map(|j| {
                let mu = means[j];
                (z.column(j).iter().map(|v| (v - mu).powi(2)).sum::<f64>() / t).sqrt()
            })
            .collect();
        Standardizer { means, stds }
    }

    pub fn apply_in_place(&self, z: &mut DMatrix<f64>) {
        for j in 0..z.ncols() {
            let (mu, sd) = (self.means[j], self.stds[j]);
            for v in z.column_mut(j).iter_mut() {
                *v = if sd > 0.0 { (*v - mu) / sd } else { 0.0 };
            }
        }
    }

    pub fn apply_row(&self, row: &mut DVector<f64>) {
        for j in 0..row.len() {
            let (mu, sd) = (self.means[j], self.stds[j]);
            row[j] = if sd > 0.0 { (row[j] - mu) / sd } else { 0.0 };
        }
    }
}

/// Design configuration: per-block transforms and standardization.
#[derive(Debug, Clone)]
pub struct DesignConfig {
    /// Almon transform applied to each indicator's lag block; `None`
    /// keeps raw lags.
    pub hf_transform: Option<AlmonTransform>,
    /// Transform for factor lag blocks; `None` keeps raw lags.
    pub factor_transform: Option<AlmonTransform>,
    pub standardize: bool,
}

impl DesignConfig {
    /// Restricted high-frequency dynamics, unrestricted factor lags.
    pub fn restricted(p_a: usize, r_a: usize, spec: &LagSpec) -> Result<Self> {
        Ok(DesignConfig {
            hf_transform: Some(almon_weight_matrix(p_a, r_a, spec.p_x)?),
            factor_transform: None,
            standardize: true,
        })
    }

    pub fn unrestricted() -> Self {
        DesignConfig { hf_transform: None, factor_transform: None, standardize: true }
    }
}

/// Provenance of one design row for the information-set audit.
#[derive(Debug, Clone, Copy)]
pub struct DesignRowAudit {
    /// Target low-frequency period label.
    pub period: i32,
    /// Newest high-frequency row used by the row's regressors.
    pub max_hf_row: usize,
    /// Newest low-frequency period whose factors enter the row
    /// (`None` when no factor lags are used).
    pub max_factor_period: Option<i32>,
    pub h_steps: usize,
}

/// The assembled SUR-MIDAS regression design.
#[derive(Debug, Clone)]
pub struct MidasDesign {
    /// T_use x p regressor matrix.
    pub z: DMatrix<f64>,
    /// T_use x K factor targets.
    pub targets: DMatrix<f64>,
    pub layout: GroupLayout,
    pub col_meta: Vec<ColumnMeta>,
    /// Low-frequency labels of the design rows.
    pub periods: Vec<i32>,
    pub standardizer: Option<Standardizer>,
    pub audit: Vec<DesignRowAudit>,
    pub warnings: Vec<String>,
    pub spec: LagSpec,
    config: DesignConfig,
}

impl MidasDesign {
    pub fn n_rows(&self) -> usize {
        self.z.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.z.ncols()
    }

    pub fn k(&self) -> usize {
        self.targets.ncols()
    }

    /// Keeps only the last `n` design rows (fixing the estimation
    /// sample size); standardization moments are left untouched.
    pub fn retain_last_rows(&mut self, n: usize) -> Result<()> {
        let t = self.n_rows();
        if n == 0 || n > t {
            return Err(Error::data(format!(
                "cannot retain {n} rows from a design with {t}"
            )));
        }
        let start = t - n;
        self.z = self.z.rows(start, n).into_owned();
        self.targets = self.targets.rows(start, n).into_owned();
        self.periods = self.periods[start..].to_vec();
        self.audit = self.audit[start..].to_vec();
        Ok(())
    }

    /// Builds the regressor row for target period index `target` using
    /// the stored transforms and standardization moments. The target's
    /// factors need not exist; its lags and the high-frequency block at
    /// the horizon's information edge must.
    pub fn forecast_row(
        &self,
        panel: &MixedFrequencyPanel,
        factors: &FactorSeries,
        target: usize,
    ) -> Result<(DVector<f64>, DesignRowAudit)> {
        let edge = self
            .spec
            .edge_row(target, panel.m)
            .filter(|e| e + 1 >= self.spec.p_x)
            .ok_or_else(|| {
                Error::data(format!("target period index {target} lacks lag history"))
            })?;
        if edge >= panel.hf.nrows() {
            return Err(Error::data(format!(
                "high-frequency data ends before the information edge of period index {target}"
            )));
        }
        if target < self.spec.p_q || target > factors.len() {
            return Err(Error::data(format!(
                "factor lags unavailable for target period index {target}"
            )));
        }
        let mut row = DVector::zeros(self.n_cols());
        let mut col = 0usize;
        let n_x = panel.n_series();
        for j in 0..n_x {
            let block = DVector::from_fn(self.spec.p_x, |l, _| panel.hf[(edge - l, j)]);
            col = write_block(&mut row, col, &block, self.config.hf_transform.as_ref());
        }
        for k in 0..factors.k() {
            let block =
                DVector::from_fn(self.spec.p_q, |l, _| factors.scores[(target - 1 - l, k)]);
            col = write_block(&mut row, col, &block, self.config.factor_transform.as_ref());
        }
        debug_assert_eq!(col, self.n_cols());
        if let Some(s) = &self.standardizer {
            s.apply_row(&mut row);
        }
        let period =
            panel.lf_periods.get(target).copied().unwrap_or(panel.lf_periods.len() as i32);
        let audit = DesignRowAudit {
            period,
            max_hf_row: edge,
            max_factor_period: if self.spec.p_q > 0 {
                Some(panel.lf_periods[target - 1])
            } else {
                None
            },
            h_steps: self.spec.h_steps,
        };
        Ok((row, audit))
    }
}

fn write_block(
    row: &mut DVector<f64>,
    col: usize,
    block: &DVector<f64>,
    transform: Option<&AlmonTransform>,
) -> usize {
    match transform {
        Some(t) => {
            let z = &t.weights * block;
            row.rows_mut(col, z.len()).copy_from(&z);
            col + z.len()
        }
        None => {
            row.rows_mut(col, block.len()).copy_from(block);
            col + block.len()
        }
    }
}

/// Assembles the design matrix, targets, and group layout.
///
/// Row `t` concatenates, per indicator, `W x_{j,t-block}`, then per
/// factor the (optionally transformed) factor lags. Usable periods are
/// those with full lag history. Rank deficiency is recorded as a
/// warning, not an error.
pub fn build_design(
    panel: &MixedFrequencyPanel,
    factors: &FactorSeries,
    spec: &LagSpec,
    config: &DesignConfig,
) -> Result<MidasDesign> {
    if factors.len() != panel.lf_periods.len() {
        return Err(Error::data(format!(
            "factor periods ({}) do not match panel periods ({})",
            factors.len(),
            panel.lf_periods.len()
        )));
    }
    if let Some(t) = &config.hf_transform {
        if t.p_lags() != spec.p_x {
            return Err(Error::config("hf transform width does not match p_x"));
        }
    }
    if let Some(t) = &config.factor_transform {
        if t.p_lags() != spec.p_q {
            return Err(Error::config("factor transform width does not match p_q"));
        }
    }
    let blocks = align_frequencies(panel, spec)?;
    let n_x = panel.n_series();
    let k = factors.k();
    let g_hf = config.hf_transform.as_ref().map(|t| t.n_out()).unwrap_or(spec.p_x);
    let g_f = config.factor_transform.as_ref().map(|t| t.n_out()).unwrap_or(spec.p_q);
    let n_cols = n_x * g_hf + k * g_f;

    // usable rows also need p_q factor lags and observed targets
    let rows: Vec<(usize, usize)> = blocks
        .usable
        .iter()
        .zip(&blocks.edges)
        .filter(|(t, _)| **t >= spec.p_q)
        .map(|(t, e)| (*t, *e))
        .collect();
    if rows.is_empty() {
        return Err(Error::data(
            "no usable periods after requiring factor lags; extend the sample",
        ));
    }

    let mut z = DMatrix::zeros(rows.len(), n_cols);
    let mut targets = DMatrix::zeros(rows.len(), k);
    let mut periods = Vec::with_capacity(rows.len());
    let mut audit = Vec::with_capacity(rows.len());
    for (r, &(t, edge)) in rows.iter().enumerate() {
        let mut col = 0usize;
        let mut rowv = DVector::zeros(n_cols);
        for j in 0..n_x {
            let block = DVector::from_fn(spec.p_x, |l, _| panel.hf[(edge - l, j)]);
            col = write_block(&mut rowv, col, &block, config.hf_transform.as_ref());
        }
        for kk in 0..k {
            let block = DVector::from_fn(spec.p_q, |l, _| factors.scores[(t - 1 - l, kk)]);
            col = write_block(&mut rowv, col, &block, config.factor_transform.as_ref());
        }
        debug_assert_eq!(col, n_cols);
        z.row_mut(r).copy_from(&rowv.transpose());
        for kk in 0..k {
            targets[(r, kk)] = factors.scores[(t, kk)];
        }
        periods.push(panel.lf_periods[t]);
        audit.push(DesignRowAudit {
            period: panel.lf_periods[t],
            max_hf_row: edge,
            max_factor_period: if spec.p_q > 0 { Some(panel.lf_periods[t - 1]) } else { None },
            h_steps: spec.h_steps,
        });
    }

    let standardizer = if config.standardize {
        let s = Standardizer::fit(&z);
        s.apply_in_place(&mut z);
        Some(s)
    } else {
        None
    };

    // group layout and metadata
    let mut groups = Vec::with_capacity(n_x + k);
    let mut col_meta = Vec::with_capacity(n_cols);
    let mut col = 0usize;
    for j in 0..n_x {
        groups.push(GroupInfo {
            name: panel.names[j].clone(),
            cols: col..col + g_hf,
            degenerate: false,
        });
        for b in 0..g_hf {
            col_meta.push(match &config.hf_transform {
                Some(_) => ColumnMeta::HfAlmon { series: j, basis: b },
                None => ColumnMeta::HfLag { series: j, lag: b + 1 },
            });
        }
        col += g_hf;
    }
    if g_f > 0 {
        for kk in 0..k {
            groups.push(GroupInfo {
                name: format!("factor_{}", kk + 1),
                cols: col..col + g_f,
                degenerate: false,
            });
            for b in 0..g_f {
                col_meta.push(match &config.factor_transform {
                    Some(_) => ColumnMeta::FactorAlmon { factor: kk, basis: b },
                    None => ColumnMeta::FactorLag { factor: kk, lag: b + 1 },
                });
            }
            col += g_f;
        }
    }
    debug_assert_eq!(col, n_cols);
    let mut layout = GroupLayout { groups, n_cols };
    layout.validate()?;

    let mut warnings = Vec::new();
    for g in &mut layout.groups {
        let degenerate = g.cols.clone().all(|j| z.column(j).iter().all(|v| *v == 0.0))
            || g
                .cols
                .clone()
                .all(|j| z.column(j).iter().all(|v| (*v - z[(0, j)]).abs() < 1e-300));
        if degenerate {
            g.degenerate = true;
            warnings.push(format!("group '{}' has zero-variance columns", g.name));
        }
    }
    if z.nrows() < z.ncols() {
        warnings.push(format!(
            "design has more columns ({}) than rows ({}); prior regularization required",
            z.ncols(),
            z.nrows()
        ));
    }

    Ok(MidasDesign {
        z,
        targets,
        layout,
        col_meta,
        periods,
        standardizer,
        audit,
        warnings,
        spec: *spec,
        config: config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;

    fn panel(t: usize, n_x: usize, m: usize, seed: u64) -> MixedFrequencyPanel {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let hf = DMatrix::from_fn(t * m, n_x, |_, _| rng.gen::<f64>());
        MixedFrequencyPanel::new(hf, m, (2000..2000 + t as i32).collect(), vec![]).unwrap()
    }

    fn factors(t: usize, k: usize, seed: u64) -> FactorSeries {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        FactorSeries {
            scores: DMatrix::from_fn(t, k, |_, _| rng.gen::<f64>() - 0.5),
            periods: (2000..2000 + t as i32).collect(),
        }
    }

    #[test]
    fn lag_ladder_at_h0_covers_the_target_year() {
        let p = panel(3, 1, 4, 1);
        let spec = LagSpec::new(4, 0, 0).unwrap();
        let b = align_frequencies(&p, &spec).unwrap();
        // year index 1 (0-based): rows 7,6,5,4 = its four quarters
        let r = b.usable.iter().position(|t| *t == 1).unwrap();
        for l in 0..4 {
            assert_eq!(b.rows[(r, l)], p.hf[(7 - l, 0)]);
        }
        assert_eq!(b.edges[r], 7);
    }

    #[test]
    fn lag_ladder_at_h_three_quarters() {
        // h = 3/4: Q1 of year t, then Q4..Q2 of year t-1
        let p = panel(3, 1, 4, 2);
        let spec = LagSpec::new(4, 0, 3).unwrap();
        let b = align_frequencies(&p, &spec).unwrap();
        let r = b.usable.iter().position(|t| *t == 1).unwrap();
        let expect_rows = [4usize, 3, 2, 1]; // Q1 of year 1 is row 4
        for (l, er) in expect_rows.iter().enumerate() {
            assert_eq!(b.rows[(r, l)], p.hf[(*er, 0)]);
        }
        assert_eq!(b.edges[r], 4);
    }

    #[test]
    fn block_spans_six_years_for_24_lags() {
        let p = panel(8, 1, 4, 3);
        let spec = LagSpec::new(24, 0, 0).unwrap();
        let b = align_frequencies(&p, &spec).unwrap();
        assert_eq!(b.usable, vec![5, 6, 7]);
        let r = 0;
        assert_eq!(b.edges[r], 23);
        assert_eq!(b.rows.ncols(), 24);
    }

    #[test]
    fn insufficient_history_names_the_first_feasible_period() {
        let p = panel(2, 1, 4, 4);
        let spec = LagSpec::new(24, 0, 0).unwrap();
        let err = align_frequencies(&p, &spec).unwrap_err();
        assert!(err.to_string().contains("first feasible period index is 6"), "{err}");
    }

    #[test]
    fn almon_monomial_rows() {
        let t = almon_weight_matrix(2, 0, 4).unwrap();
        let expected =
            DMatrix::from_row_slice(3, 4, &[1., 1., 1., 1., 1., 2., 3., 4., 1., 4., 9., 16.]);
        assert_eq!(t.weights, expected);

        let flat = almon_weight_matrix(0, 0, 6).unwrap();
        assert_eq!(flat.weights, DMatrix::from_row_slice(1, 6, &[1.; 6]));
    }

    #[test]
    fn almon_endpoint_restrictions_hold() {
        let t = almon_weight_matrix(2, 2, 12).unwrap();
        assert_eq!(t.n_out(), 1);
        // any coefficient vector: weight and slope vanish at l = 12
        for c in [-2.0, 0.5, 3.0] {
            let poly = |l: f64| c * (l * l - 2.0 * 12.0 * l + 12.0f64.powi(2));
            assert_abs_diff_eq!(poly(12.0), 0.0, epsilon = 1e-9);
            let slope = (poly(12.0 + 1e-6) - poly(12.0 - 1e-6)) / 2e-6;
            assert_abs_diff_eq!(slope, 0.0, epsilon = 1e-4);
        }
        // numerically, from the weight rows themselves
        let t = almon_weight_matrix(3, 2, 12).unwrap();
        for row in t.weights.row_iter() {
            assert_abs_diff_eq!(row[11], 0.0, epsilon = 1e-9);
            let slope = row[11] - row[10];
            let slope2 = row[10] - row[9];
            // end of a smooth polynomial with zero derivative: last
            // increment much smaller than the previous one
            assert!(slope.abs() < 0.6 * slope2.abs() + 1e-9);
        }
        assert!(almon_weight_matrix(2, 3, 12).is_err());
    }

    #[test]
    fn design_column_counts_and_groups() {
        // n_x=1, K=1, p_x=4, p_q=1, Almon(2,0) -> 3+1 columns, sizes {3,1}
        let p = panel(6, 1, 4, 5);
        let f = factors(6, 1, 6);
        let spec = LagSpec::new(4, 1, 0).unwrap();
        let cfg = DesignConfig {
            hf_transform: Some(almon_weight_matrix(2, 0, 4).unwrap()),
            factor_transform: None,
            standardize: true,
        };
        let d = build_design(&p, &f, &spec, &cfg).unwrap();
        assert_eq!(d.n_cols(), 4);
        assert_eq!(d.layout.n_groups(), 2);
        assert_eq!(d.layout.group_size(0), 3);
        assert_eq!(d.layout.group_size(1), 1);
        d.layout.validate().unwrap();
    }

    #[test]
    fn unrestricted_design_has_726_columns() {
        let p = panel(10, 30, 4, 7);
        let f = factors(10, 3, 8);
        let spec = LagSpec::new(24, 2, 0).unwrap();
        let d = build_design(&p, &f, &spec, &DesignConfig::unrestricted()).unwrap();
        assert_eq!(d.n_cols(), 30 * 24 + 3 * 2);
        assert_eq!(d.layout.n_groups(), 33);
    }

    #[test]
    fn identity_transform_equals_raw_stacking() {
        let p = panel(8, 3, 4, 9);
        let f = factors(8, 2, 10);
        let spec = LagSpec::new(4, 2, 0).unwrap();
        let raw = build_design(&p, &f, &spec, &DesignConfig::unrestricted()).unwrap();
        let ident = DesignConfig {
            hf_transform: Some(AlmonTransform::identity(4)),
            factor_transform: Some(AlmonTransform::identity(2)),
            standardize: true,
        };
        let with_ident = build_design(&p, &f, &spec, &ident).unwrap();
        assert_eq!(raw.z, with_ident.z);
        assert_eq!(raw.targets, with_ident.targets);
    }

    #[test]
    fn reparameterized_almon_spans_the_same_column_space() {
        // projection matrices of Z(W) and Z(RW) agree for full-rank R
        let p = panel(30, 2, 4, 11);
        let f = factors(30, 1, 12);
        let spec = LagSpec::new(6, 1, 0).unwrap();
        let w = almon_weight_matrix(2, 0, 6).unwrap();
        let r = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.0, 0.0, 1.0, -0.4, 0.3, 0.0, 1.0]);
        let rw = AlmonTransform { p_a: 2, r_a: 0, weights: &r * &w.weights };
        let mk = |tr: AlmonTransform| {
            let cfg =
                DesignConfig { hf_transform: Some(tr), factor_transform: None, standardize: false };
            build_design(&p, &f, &spec, &cfg).unwrap()
        };
        let za = mk(w).z;
        let zb = mk(rw).z;
        let proj = |z: &DMatrix<f64>| {
            let ztz = z.transpose() * z;
            let inv = ztz.try_inverse().unwrap();
            z * inv * z.transpose()
        };
        let diff = (proj(&za) - proj(&zb)).norm();
        assert!(diff < 1e-8, "projection mismatch {diff}");
    }

    #[test]
    fn zero_variance_indicator_is_flagged() {
        let mut p = panel(8, 2, 4, 13);
        for r in 0..p.hf.nrows() {
            p.hf[(r, 1)] = 3.0;
        }
        let f = factors(8, 1, 14);
        let spec = LagSpec::new(4, 1, 0).unwrap();
        let d = build_design(&p, &f, &spec, &DesignConfig::unrestricted()).unwrap();
        assert!(d.layout.groups[1].degenerate);
        assert!(d.z.column(4).iter().all(|v| *v == 0.0));
        assert!(!d.warnings.is_empty());
    }

    #[test]
    fn forecast_row_matches_design_row() {
        let p = panel(10, 3, 4, 15);
        let f = factors(10, 2, 16);
        let spec = LagSpec::new(4, 2, 1).unwrap();
        let cfg = DesignConfig::restricted(3, 2, &spec).unwrap();
        let d = build_design(&p, &f, &spec, &cfg).unwrap();
        // the last design row must equal forecast_row for its period
        let last_t = 9usize;
        let (row, audit) = d.forecast_row(&p, &f, last_t).unwrap();
        let built = d.z.row(d.n_rows() - 1).transpose();
        assert_abs_diff_eq!((row - built).norm(), 0.0, epsilon = 1e-12);
        assert_eq!(audit.max_hf_row, d.audit.last().unwrap().max_hf_row);
    }

    #[test]
    fn audit_rows_respect_the_information_edge() {
        let p = panel(10, 2, 4, 17);
        let f = factors(10, 2, 18);
        for h in [0usize, 1, 2, 3] {
            let spec = LagSpec::new(4, 1, h).unwrap();
            let d = build_design(&p, &f, &spec, &DesignConfig::unrestricted()).unwrap();
            for a in &d.audit {
                let t = p.lf_periods.iter().position(|y| *y == a.period).unwrap();
                assert_eq!(a.max_hf_row, 4 * (t + 1) - 1 - h);
                assert_eq!(a.h_steps, h);
            }
        }
    }
}
