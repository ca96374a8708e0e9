//! Direct h-step distributional forecasting and the pseudo-real-time
//! multi-update nowcast exercise.

use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bayes::{
    gibbs_run, ridge_estimate, ridge_ml_optimize, var_baseline, GibbsConfig, RidgeHyper,
    RidgePriorScales, SpikeSlabPrior, SurMidasDraws, VarMode,
};
use crate::distribution::{
    density_from_lqd, kde_estimate, quantile_from_density, DensityOnGrid, LqdCurve, SupportGrid,
    TauGrid,
};
use crate::error::{Error, Result};
use crate::evaluation::{
    assemble_report, score_cell, CellScore, EvalReport, KlDirection, QsMethod, QS_LEVELS,
};
use crate::fpca::{fpca_of_panel, FactorSeries, FpcaBasis, LqdPanel};
use crate::midas::{
    build_design, DesignConfig, DesignRowAudit, LagSpec, MixedFrequencyPanel,
};
use crate::stream_seed;

/// One update of the nowcast calendar.
#[derive(Debug, Clone)]
pub struct UpdateSpec {
    pub label: String,
    /// Horizon in high-frequency steps (h = h_steps / m).
    pub h_steps: usize,
}

/// Calendar of targets and within-year updates.
#[derive(Debug, Clone)]
pub struct NowcastSchedule {
    pub target_years: Vec<i32>,
    /// Updates in release order, horizons strictly decreasing.
    pub updates: Vec<UpdateSpec>,
}

impl NowcastSchedule {
    /// The four-update calendar: April (h=3/4), July (2/4), October
    /// (1/4), January (0).
    pub fn standard(target_years: Vec<i32>) -> Self {
        let updates = [("April", 3usize), ("July", 2), ("October", 1), ("January", 0)]
            .into_iter()
            .map(|(l, h)| UpdateSpec { label: l.to_string(), h_steps: h })
            .collect();
        NowcastSchedule { target_years, updates }
    }

    pub fn validate(&self) -> Result<()> {
        if self.updates.is_empty() {
            return Err(Error::config("schedule has no updates"));
        }
        if !self.updates.windows(2).all(|w| w[0].h_steps > w[1].h_steps) {
            return Err(Error::config("update horizons must be strictly decreasing"));
        }
        Ok(())
    }
}

/// A distributional forecast for one (period, horizon) cell.
#[derive(Debug, Clone)]
pub struct DistributionForecast {
    pub period: i32,
    pub h_steps: usize,
    /// Retained factor forecast draws (draws x K).
    pub factor_draws: DMatrix<f64>,
    pub lqd_point: LqdCurve,
    pub density_point: DensityOnGrid,
    /// (level, quantile) pairs of the point density.
    pub quantiles: Vec<(f64, f64)>,
}

/// Draws `Theta' z + u`, `u ~ N(0, Omega(draw))`, over retained draws.
pub fn direct_forecast<R: Rng>(
    draws: &SurMidasDraws,
    z: &DVector<f64>,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let n = draws.n_retained();
    let k = draws.k;
    let mut out = DMatrix::zeros(n, k);
    for s in 0..n {
        let omega = draws.omega(s);
        let l = Cholesky::new(omega)
            .ok_or_else(|| Error::numerical("forecast covariance not positive definite"))?
            .l();
        let eta = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let noise = l * eta;
        for kk in 0..k {
            let mean = draws.intercepts[s][kk] + draws.theta[s].column(kk).dot(z);
            out[(s, kk)] = mean + noise[kk];
        }
    }
    Ok(out)
}

/// Maps factor forecast draws to a distribution forecast: per-draw LQD
/// curves are backward-mapped to densities on `out_grid`; the point
/// density is their pointwise mean, renormalized.
pub fn density_nowcast(
    factor_draws: &DMatrix<f64>,
    basis: &FpcaBasis,
    anchor: f64,
    out_grid: SupportGrid,
    levels: &[f64],
    period: i32,
    h_steps: usize,
) -> Result<DistributionForecast> {
    if factor_draws.ncols() != basis.k() {
        return Err(Error::data(format!(
            "draw width {} does not match basis K {}",
            factor_draws.ncols(),
            basis.k()
        )));
    }
    if factor_draws.nrows() == 0 {
        return Err(Error::data("no forecast draws"));
    }
    let n = factor_draws.nrows();
    let mut acc = vec![0.0f64; out_grid.n_points()];
    for s in 0..n {
        let scores: Vec<f64> = factor_draws.row(s).iter().copied().collect();
        let curve = basis.curve_from_scores(&scores)?;
        let dens = density_from_lqd(&curve, anchor)?.regrid(out_grid)?;
        for (a, v) in acc.iter_mut().zip(dens.values()) {
            *a += v;
        }
    }
    for a in acc.iter_mut() {
        *a /= n as f64;
    }
    let density_point = DensityOnGrid::new(out_grid, acc)?;
    let mean_scores: Vec<f64> =
        (0..basis.k()).map(|kk| factor_draws.column(kk).sum() / n as f64).collect();
    let lqd_point = basis.curve_from_scores(&mean_scores)?;
    let qs = quantile_from_density(&density_point, levels)?;
    let quantiles = levels.iter().copied().zip(qs).collect();
    Ok(DistributionForecast {
        period,
        h_steps,
        factor_draws: factor_draws.clone(),
        lqd_point,
        density_point,
        quantiles,
    })
}

/// Model choices for the forecasting race.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    /// Spike-and-slab group-lasso SUR-MIDAS on the Almon-restricted design.
    SpikeSlab,
    /// Ridge SUR-MIDAS, unrestricted lag dynamics.
    RidgeUnrestricted,
    /// Ridge SUR-MIDAS on the Almon-restricted design.
    RidgeRestricted,
    /// Equation-wise OLS VAR(p) on the factors only.
    VarFlat(usize),
    /// Ridge-prior VAR(p) on the factors only.
    VarRidge(usize),
}

impl Estimator {
    pub fn name(&self) -> String {
        match self {
            Estimator::SpikeSlab => "BLASSO SUR-MIDAS".to_string(),
            Estimator::RidgeUnrestricted => "RIDGE SUR-MIDAS".to_string(),
            Estimator::RidgeRestricted => "RIDGE-RES SUR-MIDAS".to_string(),
            Estimator::VarFlat(p) => format!("FLAT VAR({p})"),
            Estimator::VarRidge(p) => format!("BVAR({p})"),
        }
    }

    /// VAR baselines ignore high-frequency data and are re-estimated
    /// only at the first update of each target year.
    pub fn is_var(&self) -> bool {
        matches!(self, Estimator::VarFlat(_) | Estimator::VarRidge(_))
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "blasso" | "spike-slab" | "spike_slab" => Ok(Estimator::SpikeSlab),
            "ridge" | "ridge-unrestricted" => Ok(Estimator::RidgeUnrestricted),
            "ridge-restricted" => Ok(Estimator::RidgeRestricted),
            "var" | "var-flat" => Ok(Estimator::VarFlat(2)),
            "bvar" | "var-ridge" => Ok(Estimator::VarRidge(2)),
            other => Err(Error::config(format!("unknown estimator '{other}'"))),
        }
    }
}

/// Shared knobs of the estimation-and-forecast step.
#[derive(Debug, Clone)]
pub struct ForecastConfig {
    /// Almon order and endpoint restrictions for restricted designs.
    pub almon: (usize, usize),
    pub gibbs: GibbsConfig,
    /// Predictive draw count for ridge and VAR models.
    pub n_draws_out: usize,
    /// Keep only the last n estimation rows, when set.
    pub estimation_rows: Option<usize>,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        ForecastConfig {
            almon: (3, 2),
            gibbs: GibbsConfig::default(),
            n_draws_out: 1000,
            estimation_rows: None,
        }
    }
}

/// Output of one estimation + forecast: factor draws, the rows' audit
/// trail (estimation rows plus the forecast row last), and inclusion
/// probabilities when the estimator produces them.
#[derive(Debug)]
pub struct FactorForecast {
    pub draws: DMatrix<f64>,
    pub audit: Vec<DesignRowAudit>,
    pub inclusion: Option<DMatrix<f64>>,
}

/// Estimates `estimator` on data through `target - 1` and forecasts the
/// factors of period index `target` at horizon `spec.h_steps`.
///
/// `panel_est` holds the estimation years only (periods < target);
/// `panel_full` additionally carries the high-frequency quarters
/// available at the forecast origin.
#[allow(clippy::too_many_arguments)]
pub fn forecast_factors(
    estimator: Estimator,
    panel_est: &MixedFrequencyPanel,
    panel_full: &MixedFrequencyPanel,
    factors: &FactorSeries,
    spec: &LagSpec,
    cfg: &ForecastConfig,
    target: usize,
    rng: &mut ChaCha8Rng,
) -> Result<FactorForecast> {
    match estimator {
        Estimator::VarFlat(p) | Estimator::VarRidge(p) => {
            let mode = if matches!(estimator, Estimator::VarFlat(_)) {
                VarMode::Flat
            } else {
                VarMode::Ridge
            };
            let fit = var_baseline(factors, p, mode)?;
            let z = fit.forecast_regressors(factors)?;
            let draws = fit.forecast_draws(&z, cfg.n_draws_out, rng)?;
            let audit = vec![DesignRowAudit {
                period: panel_full.lf_periods[target],
                max_hf_row: 0,
                max_factor_period: Some(factors.periods[factors.len() - 1]),
                h_steps: spec.h_steps,
            }];
            Ok(FactorForecast { draws, audit, inclusion: None })
        }
        Estimator::SpikeSlab => {
            let design_cfg = DesignConfig::restricted(cfg.almon.0, cfg.almon.1, spec)?;
            let mut design = build_design(panel_est, factors, spec, &design_cfg)?;
            if let Some(n) = cfg.estimation_rows {
                design.retain_last_rows(n)?;
            }
            let mut prior = SpikeSlabPrior::default_for(factors.k(), cfg.gibbs.seed);
            prior.gibbs = cfg.gibbs;
            let draws = gibbs_run(&design, &prior)?;
            let (z, row_audit) = design.forecast_row(panel_full, factors, target)?;
            let fdraws = direct_forecast(&draws, &z, rng)?;
            let mut audit = design.audit.clone();
            audit.push(row_audit);
            Ok(FactorForecast {
                draws: fdraws,
                audit,
                inclusion: Some(draws.inclusion_probabilities()),
            })
        }
        Estimator::RidgeUnrestricted | Estimator::RidgeRestricted => {
            let restricted = matches!(estimator, Estimator::RidgeRestricted);
            let design_cfg = if restricted {
                DesignConfig {
                    standardize: false,
                    ..DesignConfig::restricted(cfg.almon.0, cfg.almon.1, spec)?
                }
            } else {
                DesignConfig { standardize: false, ..DesignConfig::unrestricted() }
            };
            let mut design = build_design(panel_est, factors, spec, &design_cfg)?;
            if let Some(n) = cfg.estimation_rows {
                design.retain_last_rows(n)?;
            }
            let scales = RidgePriorScales::from_data(&factors.scores, &panel_est.hf);
            let (hyper, _) = ridge_ml_optimize(
                &design.z,
                &design.targets,
                &design.col_meta,
                &RidgeHyper::default(),
                &scales,
                restricted,
            )?;
            let post =
                ridge_estimate(&design.z, &design.targets, &design.col_meta, &hyper, &scales)?;
            let (z, row_audit) = design.forecast_row(panel_full, factors, target)?;
            let fdraws = post.forecast_draws(&z, cfg.n_draws_out, rng)?;
            let mut audit = design.audit.clone();
            audit.push(row_audit);
            Ok(FactorForecast { draws: fdraws, audit, inclusion: None })
        }
    }
}

/// Input bundle of the nowcast exercise.
#[derive(Debug, Clone)]
pub struct NowcastData {
    /// Micro samples per low-frequency period label.
    pub micro: BTreeMap<i32, Vec<f64>>,
    /// Indicator panel covering at least the target years.
    pub indicators: MixedFrequencyPanel,
}

/// Configuration of the pseudo-real-time exercise.
#[derive(Debug, Clone)]
pub struct NowcastConfig {
    pub support: SupportGrid,
    pub tau: TauGrid,
    pub k: usize,
    pub p_x: usize,
    pub p_q: usize,
    pub almon: (usize, usize),
    /// Backward-map anchor (support lower bound of reconstructions).
    pub anchor: f64,
    pub bandwidth: Option<f64>,
    pub gibbs: GibbsConfig,
    pub n_draws_out: usize,
    pub qs_method: QsMethod,
    pub seed: u64,
    /// Minimum estimation design rows before a cell is attempted.
    pub min_estimation_rows: usize,
}

/// One entry of the information-set audit log.
#[derive(Debug, Clone)]
pub struct AuditRecord {
    pub target_year: i32,
    pub update_label: String,
    pub h_steps: usize,
    pub model: String,
    /// Period the design row belongs to (the forecast row repeats the
    /// target year).
    pub row_period: i32,
    /// Newest high-frequency observation used, as (year, quarter);
    /// `None` for factor-only models.
    pub max_hf_date: Option<(i32, u8)>,
    /// The information edge of this origin, as (year, quarter).
    pub origin: (i32, u8),
    pub max_factor_period: Option<i32>,
}

/// Everything the exercise produces.
#[derive(Debug)]
pub struct NowcastOutput {
    pub cells: Vec<CellScore>,
    pub forecasts: Vec<(String, DistributionForecast)>,
    pub audit: Vec<AuditRecord>,
    pub report: EvalReport,
    pub skipped: Vec<String>,
}

fn truncate_panel(panel: &MixedFrequencyPanel, n_years: usize) -> MixedFrequencyPanel {
    let rows = n_years * panel.m;
    MixedFrequencyPanel {
        hf: panel.hf.rows(0, rows).into_owned(),
        m: panel.m,
        lf_periods: panel.lf_periods[..n_years].to_vec(),
        names: panel.names.clone(),
    }
}

/// Expanding-window pseudo-real-time loop over (year, update, model).
///
/// At each origin only data available then enters: densities through the
/// previous year, high-frequency rows up to the release quarter. VAR
/// baselines are refreshed only at the first update of each year. Every
/// design row is audited against the origin edge; a row that would peek
/// past it aborts the run.
pub fn run_nowcast_exercise(
    data: &NowcastData,
    schedule: &NowcastSchedule,
    estimators: &[Estimator],
    cfg: &NowcastConfig,
) -> Result<NowcastOutput> {
    schedule.validate()?;
    if estimators.is_empty() {
        return Err(Error::config("no estimators requested"));
    }
    let panel = &data.indicators;
    let years = &panel.lf_periods;

    // densities per year are origin-independent: cache them up front
    let mut densities: BTreeMap<i32, DensityOnGrid> = BTreeMap::new();
    for (&year, samples) in &data.micro {
        densities.insert(year, kde_estimate(samples, cfg.support, cfg.bandwidth)?);
    }

    let mut cells = Vec::new();
    let mut forecasts = Vec::new();
    let mut audit_log: Vec<AuditRecord> = Vec::new();
    let mut skipped = Vec::new();
    let mut cell_index = 0u64;

    for &target_year in &schedule.target_years {
        let target_idx = match years.iter().position(|y| *y == target_year) {
            Some(i) => i,
            None => {
                skipped.push(format!("{target_year}: not covered by the indicator panel"));
                continue;
            }
        };
        // estimation window: every micro year strictly before the target
        let est_years: Vec<i32> = densities
            .keys()
            .copied()
            .filter(|y| *y < target_year && years.contains(y))
            .collect();
        if est_years.len() < cfg.p_q + 2 {
            skipped.push(format!("{target_year}: estimation window too short"));
            continue;
        }
        let truth = match densities.get(&target_year) {
            Some(d) => d.clone(),
            None => {
                skipped.push(format!("{target_year}: no realized micro data to score against"));
                continue;
            }
        };

        // FPCA on the estimation window (shared by all updates of the year)
        let curves = est_years
            .iter()
            .map(|y| crate::distribution::lqd_from_density(&densities[y], cfg.tau))
            .collect::<Result<Vec<_>>>()?;
        let lqd_panel = LqdPanel::from_curves(&curves, est_years.clone())?;
        let (basis, factors) = match fpca_of_panel(&lqd_panel, cfg.k) {
            Ok(v) => v,
            Err(e) => {
                skipped.push(format!("{target_year}: FPCA failed ({e})"));
                continue;
            }
        };
        // estimation years must be the contiguous leading panel years
        if est_years.as_slice() != &years[..est_years.len()] {
            return Err(Error::data(
                "micro years and indicator years disagree on the estimation window",
            ));
        }
        let panel_est = truncate_panel(panel, est_years.len());

        for (u_idx, update) in schedule.updates.iter().enumerate() {
            let spec = LagSpec::new(cfg.p_x, cfg.p_q, update.h_steps)?;
            let edge = match spec.edge_row(target_idx, panel.m) {
                Some(e) if e < panel.hf.nrows() => e,
                _ => {
                    skipped.push(format!(
                        "{target_year}/{}: insufficient high-frequency data",
                        update.label
                    ));
                    continue;
                }
            };
            let origin = panel.row_date(edge);
            for &est in estimators {
                if est.is_var() && u_idx > 0 {
                    continue;
                }
                let cfg_fc = ForecastConfig {
                    almon: cfg.almon,
                    gibbs: GibbsConfig { seed: stream_seed(cfg.seed, cell_index), ..cfg.gibbs },
                    n_draws_out: cfg.n_draws_out,
                    estimation_rows: None,
                };
                let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, cell_index + 1));
                cell_index += 2;
                let fc = match forecast_factors(
                    est, &panel_est, panel, &factors, &spec, &cfg_fc, target_idx, &mut rng,
                ) {
                    Ok(f) => f,
                    Err(e) => {
                        skipped.push(format!(
                            "{target_year}/{}/{}: {e}",
                            update.label,
                            est.name()
                        ));
                        continue;
                    }
                };
                if !est.is_var() && fc.audit.len().saturating_sub(1) < cfg.min_estimation_rows {
                    skipped.push(format!(
                        "{target_year}/{}/{}: estimation window below minimum rows",
                        update.label,
                        est.name()
                    ));
                    continue;
                }
                // information-set tripwire: no row may use data past the edge
                for rec in &fc.audit {
                    if !est.is_var() && rec.max_hf_row > edge {
                        return Err(Error::data(format!(
                            "leakage: design row for {} uses high-frequency row {} past edge {}",
                            rec.period, rec.max_hf_row, edge
                        )));
                    }
                    audit_log.push(AuditRecord {
                        target_year,
                        update_label: update.label.clone(),
                        h_steps: update.h_steps,
                        model: est.name(),
                        row_period: rec.period,
                        max_hf_date: if est.is_var() {
                            None
                        } else {
                            Some(panel.row_date(rec.max_hf_row))
                        },
                        origin,
                        max_factor_period: rec.max_factor_period,
                    });
                }
                let forecast = density_nowcast(
                    &fc.draws,
                    &basis,
                    cfg.anchor,
                    cfg.support,
                    &QS_LEVELS,
                    target_year,
                    update.h_steps,
                )?;
                let horizon_label = format!("h={}/{}", update.h_steps, panel.m);
                let cell = score_cell(
                    &est.name(),
                    &horizon_label,
                    target_year,
                    &forecast.density_point,
                    &truth,
                    &QS_LEVELS,
                    cfg.qs_method,
                    KlDirection::TruthFirst,
                )?;
                cells.push(cell);
                forecasts.push((est.name(), forecast));
            }
        }
    }

    if cells.is_empty() {
        return Err(Error::data("nowcast exercise produced no cells; see the skip log"));
    }
    let mut report = assemble_report(&cells, &QS_LEVELS)?;
    report.excluded = skipped.clone();
    Ok(NowcastOutput { cells, forecasts, audit: audit_log, report, skipped })
}
