//! Distributional forecast accuracy metrics and report assembly.

use std::collections::BTreeMap;

use crate::distribution::{trapezoid, DensityOnGrid, MomentField, MomentSet};
use crate::error::{Error, Result};

/// Default quantile-score levels.
pub const QS_LEVELS: [f64; 5] = [0.05, 0.20, 0.50, 0.80, 0.95];

fn check_grids(a: &DensityOnGrid, b: &DensityOnGrid) -> Result<()> {
    if a.grid() != b.grid() {
        return Err(Error::data("metric inputs must share the same grid"));
    }
    Ok(())
}

/// Direction of the KL distance; the forecast-evaluation convention
/// puts the truth first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KlDirection {
    #[default]
    TruthFirst,
    PredFirst,
}

/// KL distance in a chosen direction.
pub fn kl_distance_directed(
    truth: &DensityOnGrid,
    pred: &DensityOnGrid,
    direction: KlDirection,
) -> Result<f64> {
    match direction {
        KlDirection::TruthFirst => kl_distance(truth, pred),
        KlDirection::PredFirst => kl_distance(pred, truth),
    }
}

/// Kullback-Leibler distance `∫ truth log(truth / pred)` (trapezoidal).
pub fn kl_distance(truth: &DensityOnGrid, pred: &DensityOnGrid) -> Result<f64> {
    check_grids(truth, pred)?;
    let integrand: Vec<f64> = truth
        .values()
        .iter()
        .zip(pred.values())
        .map(|(p, q)| p * (p / q).ln())
        .collect();
    Ok(trapezoid(truth.grid().step(), &integrand))
}

/// Hellinger distance `sqrt(½ ∫ (√truth − √pred)²)`, in `[0, 1]`.
pub fn hellinger(truth: &DensityOnGrid, pred: &DensityOnGrid) -> Result<f64> {
    check_grids(truth, pred)?;
    let integrand: Vec<f64> = truth
        .values()
        .iter()
        .zip(pred.values())
        .map(|(p, q)| (p.sqrt() - q.sqrt()).powi(2))
        .collect();
    Ok((0.5 * trapezoid(truth.grid().step(), &integrand)).sqrt().min(1.0))
}

/// Quantile-score flavor. The default scores `|Q_pred(τ) − Q_truth(τ)|`;
/// `Pinball` scores the expected pinball loss of the predicted quantile
/// under the truth density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QsMethod {
    #[default]
    AbsoluteError,
    Pinball,
}

/// Quantile score of the prediction against the truth at `level`.
pub fn quantile_score(
    pred: &DensityOnGrid,
    truth: &DensityOnGrid,
    level: f64,
    method: QsMethod,
) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::config(format!("quantile level {level} outside (0, 1)")));
    }
    let qp = crate::distribution::quantile_from_density(pred, &[level])?[0];
    match method {
        QsMethod::AbsoluteError => {
            let qt = crate::distribution::quantile_from_density(truth, &[level])?[0];
            Ok((qp - qt).abs())
        }
        QsMethod::Pinball => {
            // E_y [ (level - 1{y < qp}) (y - qp) ] under the truth density
            let xs = truth.grid().points();
            let integrand: Vec<f64> = xs
                .iter()
                .zip(truth.values())
                .map(|(y, f)| {
                    let ind = if *y < qp { 1.0 } else { 0.0 };
                    (level - ind) * (y - qp) * f
                })
                .collect();
            Ok(trapezoid(truth.grid().step(), &integrand))
        }
    }
}

/// Moment RMSE with a count of pairs skipped because either side was
/// undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentRmse {
    pub value: f64,
    pub n_used: usize,
    pub n_flagged: usize,
}

/// RMSE of `field` over aligned prediction/truth moment series.
pub fn moment_rmse(
    pred: &[MomentSet],
    truth: &[MomentSet],
    field: MomentField,
) -> Result<MomentRmse> {
    if pred.len() != truth.len() {
        return Err(Error::data(format!(
            "moment series length mismatch: {} vs {}",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::data("moment_rmse requires at least one period"));
    }
    let mut sum = 0.0;
    let mut used = 0usize;
    let mut flagged = 0usize;
    for (p, t) in pred.iter().zip(truth) {
        match (p.get(field), t.get(field)) {
            (Some(a), Some(b)) if a.is_finite() && b.is_finite() => {
                sum += (a - b).powi(2);
                used += 1;
            }
            _ => flagged += 1,
        }
    }
    let value = if used > 0 { (sum / used as f64).sqrt() } else { f64::NAN };
    Ok(MomentRmse { value, n_used: used, n_flagged: flagged })
}

/// Scores of one evaluated forecast cell (model, horizon, period).
#[derive(Debug, Clone)]
pub struct CellScore {
    pub model: String,
    pub horizon_label: String,
    pub period: i32,
    pub kl: f64,
    pub hd: f64,
    /// (level, score) pairs, ordered by level.
    pub qs: Vec<(f64, f64)>,
    pub pred_moments: MomentSet,
    pub truth_moments: MomentSet,
}

/// Scores a single (prediction, truth) density pair.
#[allow(clippy::too_many_arguments)]
pub fn score_cell(
    model: &str,
    horizon_label: &str,
    period: i32,
    pred: &DensityOnGrid,
    truth: &DensityOnGrid,
    qs_levels: &[f64],
    qs_method: QsMethod,
    kl_direction: KlDirection,
) -> Result<CellScore> {
    let qs = qs_levels
        .iter()
        .map(|&l| Ok((l, quantile_score(pred, truth, l, qs_method)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CellScore {
        model: model.to_string(),
        horizon_label: horizon_label.to_string(),
        period,
        kl: kl_distance_directed(truth, pred, kl_direction)?,
        hd: hellinger(truth, pred)?,
        qs,
        pred_moments: crate::distribution::distribution_moments(pred),
        truth_moments: crate::distribution::distribution_moments(truth),
    })
}

/// One row of the accuracy report: a (model, horizon) pair averaged over
/// evaluation periods.
#[derive(Debug, Clone)]
pub struct ReportRow {
    pub model: String,
    pub horizon_label: String,
    pub n_cells: usize,
    pub avg_kl: f64,
    pub avg_hd: f64,
    /// (level, average score), ordered by level.
    pub avg_qs: Vec<(f64, f64)>,
    /// RMSE per moment field, in [`MomentField::ALL`] order.
    pub moment_rmse: Vec<MomentRmse>,
}

/// Accuracy table mirroring the per-horizon metric layout.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
    pub qs_levels: Vec<f64>,
    /// Replications or cells excluded upstream, with reasons.
    pub excluded: Vec<String>,
}

impl EvalReport {
    pub fn row(&self, model: &str, horizon_label: &str) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.model == model && r.horizon_label == horizon_label)
    }

    /// Fixed-column-order CSV of the report.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,horizon,n_cells,avg_kl,avg_hd");
        for l in &self.qs_levels {
            out.push_str(&format!(",avg_qs{}", (l * 100.0).round() as i64));
        }
        for f in MomentField::ALL {
            out.push_str(&format!(",rmse_{}", f.label().to_lowercase()));
        }
        out.push_str(",n_flagged\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}",
                r.model, r.horizon_label, r.n_cells, r.avg_kl, r.avg_hd
            ));
            for (_, v) in &r.avg_qs {
                out.push_str(&format!(",{v}"));
            }
            let mut flagged = 0usize;
            for m in &r.moment_rmse {
                out.push_str(&format!(",{}", m.value));
                flagged += m.n_flagged;
            }
            out.push_str(&format!(",{flagged}\n"));
        }
        out
    }
}

/// Averages cell metrics per (model, horizon) into a report.
pub fn assemble_report(cells: &[CellScore], qs_levels: &[f64]) -> Result<EvalReport> {
    if cells.is_empty() {
        return Err(Error::data("assemble_report requires at least one cell"));
    }
    let mut grouped: BTreeMap<(String, String), Vec<&CellScore>> = BTreeMap::new();
    for c in cells {
        grouped
            .entry((c.horizon_label.clone(), c.model.clone()))
            .or_default()
            .push(c);
    }
    let mut rows = Vec::with_capacity(grouped.len());
    for ((horizon_label, model), group) in grouped {
        let n = group.len() as f64;
        let avg_kl = group.iter().map(|c| c.kl).sum::<f64>() / n;
        let avg_hd = group.iter().map(|c| c.hd).sum::<f64>() / n;
        let avg_qs = qs_levels
            .iter()
            .enumerate()
            .map(|(i, &l)| (l, group.iter().map(|c| c.qs[i].1).sum::<f64>() / n))
            .collect();
        let preds: Vec<MomentSet> = group.iter().map(|c| c.pred_moments).collect();
        let truths: Vec<MomentSet> = group.iter().map(|c| c.truth_moments).collect();
        let moment_rmse = MomentField::ALL
            .iter()
            .map(|&f| moment_rmse(&preds, &truths, f))
            .collect::<Result<Vec<_>>>()?;
        rows.push(ReportRow {
            model,
            horizon_label,
            n_cells: group.len(),
            avg_kl,
            avg_hd,
            avg_qs,
            moment_rmse,
        });
    }
    Ok(EvalReport { rows, qs_levels: qs_levels.to_vec(), excluded: Vec::new() })
}
