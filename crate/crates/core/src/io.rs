//! CSV interfaces: micro samples, densities and LQD curves, quarterly
//! indicators with declared transforms, FPCA artifacts, draw stores, and
//! reports. Floats are written with Rust's shortest-roundtrip formatting
//! so identical values serialize byte-identically.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::bayes::SurMidasDraws;
use crate::distribution::{DensityOnGrid, LqdCurve, SupportGrid, TauGrid};
use crate::error::{Error, Result};
use crate::evaluation::EvalReport;
use crate::forecast::AuditRecord;
use crate::fpca::{FactorSeries, FpcaBasis};
use crate::midas::MixedFrequencyPanel;

fn open_writer(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(std::io::BufWriter::new(std::fs::File::create(path)?))
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

fn parse_field<T: std::str::FromStr>(
    record: &csv::StringRecord,
    idx: usize,
    what: &str,
) -> Result<T> {
    let raw = record.get(idx).ok_or_else(|| {
        Error::data(format!("line {}: missing {what} column", line_of(record)))
    })?;
    raw.trim().parse::<T>().map_err(|_| {
        Error::data(format!("line {}: cannot parse {what} from '{raw}'", line_of(record)))
    })
}

// ---------------------------------------------------------------- micro

/// Writes long-format micro samples (`period,value`).
pub fn write_micro_csv(path: &Path, micro: &BTreeMap<i32, Vec<f64>>) -> Result<()> {
    let mut w = open_writer(path)?;
    writeln!(w, "period,value")?;
    for (period, values) in micro {
        for v in values {
            writeln!(w, "{period},{v}")?;
        }
    }
    Ok(())
}

/// Reads long-format micro samples.
pub fn read_micro_csv(path: &Path) -> Result<BTreeMap<i32, Vec<f64>>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.iter().map(str::trim).collect::<Vec<_>>() != ["period", "value"] {
        return Err(Error::data(format!(
            "{}: expected header 'period,value', got '{}'",
            path.display(),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
    for record in rdr.records() {
        let record = record?;
        let period: i32 = parse_field(&record, 0, "period")?;
        let value: f64 = parse_field(&record, 1, "value")?;
        if !value.is_finite() {
            return Err(Error::data(format!(
                "line {}: non-finite micro value",
                line_of(&record)
            )));
        }
        out.entry(period).or_default().push(value);
    }
    if out.is_empty() {
        return Err(Error::data(format!("{}: no observations", path.display())));
    }
    Ok(out)
}

// ------------------------------------------------------------- densities

/// Writes a density (or any curve) as `grid_point,value`.
pub fn write_density_csv(path: &Path, d: &DensityOnGrid) -> Result<()> {
    let mut w = open_writer(path)?;
    writeln!(w, "grid_point,value")?;
    for i in 0..d.grid().n_points() {
        writeln!(w, "{},{}", d.grid().point(i), d.values()[i])?;
    }
    Ok(())
}

fn read_curve(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.iter().map(str::trim).collect::<Vec<_>>() != ["grid_point", "value"] {
        return Err(Error::data(format!(
            "{}: expected header 'grid_point,value'",
            path.display()
        )));
    }
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for record in rdr.records() {
        let record = record?;
        xs.push(parse_field::<f64>(&record, 0, "grid_point")?);
        vs.push(parse_field::<f64>(&record, 1, "value")?);
    }
    if xs.len() < 3 {
        return Err(Error::data(format!("{}: curve needs at least 3 points", path.display())));
    }
    Ok((xs, vs))
}

/// Reads a density; the grid must be evenly spaced.
pub fn read_density_csv(path: &Path) -> Result<DensityOnGrid> {
    let (xs, vs) = read_curve(path)?;
    let grid = infer_even_grid(&xs)
        .ok_or_else(|| Error::data(format!("{}: grid points not evenly spaced", path.display())))?;
    DensityOnGrid::new(grid, vs)
}

fn infer_even_grid(xs: &[f64]) -> Option<SupportGrid> {
    let n = xs.len();
    let step = (xs[n - 1] - xs[0]) / (n - 1) as f64;
    if step <= 0.0 {
        return None;
    }
    let tol = step * 1e-6;
    for (i, x) in xs.iter().enumerate() {
        if (x - (xs[0] + step * i as f64)).abs() > tol {
            return None;
        }
    }
    SupportGrid::new(xs[0], xs[n - 1], n).ok()
}

/// Writes an LQD curve as `grid_point,value` over its τ grid.
pub fn write_lqd_csv(path: &Path, q: &LqdCurve) -> Result<()> {
    let mut w = open_writer(path)?;
    writeln!(w, "grid_point,value")?;
    for i in 0..q.tau_grid().n_tau() {
        writeln!(w, "{},{}", q.tau_grid().point(i), q.values()[i])?;
    }
    Ok(())
}

/// Reads an LQD curve; the τ grid is recovered from the points.
pub fn read_lqd_csv(path: &Path) -> Result<LqdCurve> {
    let (xs, vs) = read_curve(path)?;
    let delta = xs[0];
    let tau = TauGrid::new(delta, xs.len())?;
    for (i, x) in xs.iter().enumerate() {
        if (x - tau.point(i)).abs() > 1e-9 {
            return Err(Error::data(format!(
                "{}: tau grid not of the form {{delta..1-delta}}",
                path.display()
            )));
        }
    }
    LqdCurve::new(tau, vs)
}

// ------------------------------------------------------------ indicators

/// Declared per-series ingestion transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    Level,
    Diff,
    PctChange,
}

impl Transform {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "level" => Ok(Transform::Level),
            "diff" | "delta" => Ok(Transform::Diff),
            "pct_change" | "pct" | "growth" => Ok(Transform::PctChange),
            other => Err(Error::data(format!("unknown transform '{other}'"))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Transform::Level => "level",
            Transform::Diff => "diff",
            Transform::PctChange => "pct_change",
        }
    }
}

fn parse_quarter_date(raw: &str, line: u64) -> Result<(i32, u8)> {
    let s = raw.trim();
    let (y, q) = s
        .split_once(['Q', 'q'])
        .ok_or_else(|| Error::data(format!("line {line}: date '{s}' not in YYYYQn form")))?;
    let year: i32 = y
        .parse()
        .map_err(|_| Error::data(format!("line {line}: bad year in date '{s}'")))?;
    let quarter: u8 = q
        .parse()
        .map_err(|_| Error::data(format!("line {line}: bad quarter in date '{s}'")))?;
    if !(1..=4).contains(&quarter) {
        return Err(Error::data(format!("line {line}: quarter {quarter} outside 1..=4")));
    }
    Ok((year, quarter))
}

/// Writes the quarterly indicator panel (`date,series...` with YYYYQn dates).
pub fn write_indicators_csv(path: &Path, panel: &MixedFrequencyPanel) -> Result<()> {
    let mut w = open_writer(path)?;
    write!(w, "date")?;
    for name in &panel.names {
        write!(w, ",{name}")?;
    }
    writeln!(w)?;
    for r in 0..panel.hf.nrows() {
        let (year, quarter) = panel.row_date(r);
        write!(w, "{year}Q{quarter}")?;
        for j in 0..panel.n_series() {
            write!(w, ",{}", panel.hf[(r, j)])?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Reads a quarterly indicator panel. Rows must be contiguous quarters
/// covering whole years.
pub fn read_indicators_csv(path: &Path) -> Result<MixedFrequencyPanel> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.len() < 2 || headers.get(0).map(str::trim) != Some("date") {
        return Err(Error::data(format!(
            "{}: expected header 'date,series...'",
            path.display()
        )));
    }
    let names: Vec<String> = headers.iter().skip(1).map(|s| s.trim().to_string()).collect();
    let mut dates = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = line_of(&record);
        let date = parse_quarter_date(
            record.get(0).ok_or_else(|| Error::data(format!("line {line}: empty row")))?,
            line,
        )?;
        let mut row = Vec::with_capacity(names.len());
        for (j, name) in names.iter().enumerate() {
            let v: f64 = parse_field(&record, j + 1, &format!("series '{name}'"))?;
            if !v.is_finite() {
                return Err(Error::data(format!("line {line}: non-finite indicator value")));
            }
            row.push(v);
        }
        dates.push(date);
        rows.push(row);
    }
    if dates.is_empty() {
        return Err(Error::data(format!("{}: no indicator rows", path.display())));
    }
    // contiguity and whole-year coverage
    if dates[0].1 != 1 || dates[dates.len() - 1].1 != 4 || dates.len() % 4 != 0 {
        return Err(Error::data(format!(
            "{}: indicator rows must cover whole years Q1..Q4",
            path.display()
        )));
    }
    for w in dates.windows(2) {
        let expected = if w[0].1 == 4 { (w[0].0 + 1, 1) } else { (w[0].0, w[0].1 + 1) };
        if w[1] != expected {
            return Err(Error::data(format!(
                "{}: gap in quarters after {}Q{}",
                path.display(),
                w[0].0,
                w[0].1
            )));
        }
    }
    let lf_periods: Vec<i32> = dates.iter().step_by(4).map(|d| d.0).collect();
    let hf = DMatrix::from_fn(rows.len(), names.len(), |r, c| rows[r][c]);
    MixedFrequencyPanel::new(hf, 4, lf_periods, names)
}

/// Reads the transform manifest (`series,transform`).
pub fn read_transforms_csv(path: &Path) -> Result<BTreeMap<String, Transform>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.iter().map(str::trim).collect::<Vec<_>>() != ["series", "transform"] {
        return Err(Error::data(format!(
            "{}: expected header 'series,transform'",
            path.display()
        )));
    }
    let mut out = BTreeMap::new();
    for record in rdr.records() {
        let record = record?;
        let series = record.get(0).unwrap_or("").trim().to_string();
        let transform = Transform::parse(record.get(1).unwrap_or(""))?;
        out.insert(series, transform);
    }
    Ok(out)
}

/// Applies declared transforms per series. Differencing-type transforms
/// consume the first observation, so the first whole year is dropped
/// whenever any series is not taken in levels.
pub fn apply_transforms(
    panel: &MixedFrequencyPanel,
    transforms: &BTreeMap<String, Transform>,
) -> Result<MixedFrequencyPanel> {
    for name in transforms.keys() {
        if !panel.names.contains(name) {
            return Err(Error::data(format!("transform manifest names unknown series '{name}'")));
        }
    }
    let any_diff = panel
        .names
        .iter()
        .any(|n| !matches!(transforms.get(n).copied().unwrap_or(Transform::Level), Transform::Level));
    let mut hf = panel.hf.clone();
    for (j, name) in panel.names.iter().enumerate() {
        match transforms.get(name).copied().unwrap_or(Transform::Level) {
            Transform::Level => {}
            Transform::Diff => {
                for r in (1..hf.nrows()).rev() {
                    hf[(r, j)] -= hf[(r - 1, j)];
                }
            }
            Transform::PctChange => {
                for r in (1..hf.nrows()).rev() {
                    let prev = hf[(r - 1, j)];
                    if prev.abs() < 1e-12 {
                        return Err(Error::numerical(format!(
                            "growth rate of series '{name}' undefined at row {r}: previous value ~ 0"
                        )));
                    }
                    hf[(r, j)] = 100.0 * (hf[(r, j)] / prev - 1.0);
                }
            }
        }
    }
    if !any_diff {
        return MixedFrequencyPanel::new(hf, panel.m, panel.lf_periods.clone(), panel.names.clone());
    }
    if panel.lf_periods.len() < 2 {
        return Err(Error::data("cannot difference a single-year panel"));
    }
    let kept = hf.rows(panel.m, hf.nrows() - panel.m).into_owned();
    MixedFrequencyPanel::new(kept, panel.m, panel.lf_periods[1..].to_vec(), panel.names.clone())
}

// ----------------------------------------------------------------- fpca

/// Writes the basis as `tau,mean,ef_1..ef_K`.
pub fn write_basis_csv(path: &Path, basis: &FpcaBasis) -> Result<()> {
    let mut w = open_writer(path)?;
    write!(w, "tau,mean")?;
    for k in 0..basis.k() {
        write!(w, ",ef_{}", k + 1)?;
    }
    writeln!(w)?;
    for i in 0..basis.tau_grid.n_tau() {
        write!(w, "{},{}", basis.tau_grid.point(i), basis.mean_curve[i])?;
        for k in 0..basis.k() {
            write!(w, ",{}", basis.eigenfunctions[(k, i)])?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Sidecar metadata for a serialized basis.
pub fn write_basis_meta(path: &Path, basis: &FpcaBasis) -> Result<()> {
    let mut w = open_writer(path)?;
    writeln!(w, "key,value")?;
    writeln!(w, "k,{}", basis.k())?;
    writeln!(w, "n_tau,{}", basis.tau_grid.n_tau())?;
    writeln!(w, "delta,{}", basis.tau_grid.delta())?;
    writeln!(w, "total_variance,{}", basis.total_variance)?;
    for (i, s) in basis.singular_values.iter().enumerate() {
        writeln!(w, "singular_value_{},{}", i + 1, s)?;
    }
    Ok(())
}

/// Writes factor scores as `period,f_1..f_K`.
pub fn write_scores_csv(path: &Path, factors: &FactorSeries) -> Result<()> {
    let mut w = open_writer(path)?;
    write!(w, "period")?;
    for k in 0..factors.k() {
        write!(w, ",f_{}", k + 1)?;
    }
    writeln!(w)?;
    for t in 0..factors.len() {
        write!(w, "{}", factors.periods[t])?;
        for k in 0..factors.k() {
            write!(w, ",{}", factors.scores[(t, k)])?;
        }
        writeln!(w)?;
    }
    Ok(())
}

// ----------------------------------------------------------- draw store

/// Writes the flattened draw store plus its column manifest.
pub fn write_draws_csv(dir: &Path, stem: &str, draws: &SurMidasDraws) -> Result<()> {
    let (k, g) = (draws.k, draws.n_groups);
    let p = draws.theta[0].nrows();
    let manifest_path = dir.join(format!("{stem}_columns.csv"));
    let mut mw = open_writer(&manifest_path)?;
    writeln!(mw, "index,parameter")?;
    let mut names = Vec::new();
    for i in 0..k {
        names.push(format!("intercept[eq={}]", i + 1));
    }
    for i in 0..k {
        for c in 0..p {
            names.push(format!("theta[eq={},col={}]", i + 1, c + 1));
        }
    }
    for i in 1..k {
        for c in 0..i {
            names.push(format!("alpha[eq={},on={}]", i + 1, c + 1));
        }
    }
    for i in 0..k {
        names.push(format!("sigma2[eq={}]", i + 1));
    }
    for i in 0..k {
        for j in 0..g {
            names.push(format!("gamma[eq={},group={}]", i + 1, j + 1));
        }
    }
    for i in 0..k {
        for j in 0..g {
            names.push(format!("tau2[eq={},group={}]", i + 1, j + 1));
        }
    }
    for i in 0..k {
        for j in 0..g {
            names.push(format!("lambda2[eq={},group={}]", i + 1, j + 1));
        }
    }
    for i in 0..k {
        names.push(format!("pi0[eq={}]", i + 1));
    }
    for (i, n) in names.iter().enumerate() {
        writeln!(mw, "{},{}", i, n)?;
    }

    let mut w = open_writer(&dir.join(format!("{stem}.csv")))?;
    writeln!(w, "{}", (0..names.len()).map(|i| format!("c{i}")).collect::<Vec<_>>().join(","))?;
    for s in 0..draws.n_retained() {
        let mut fields: Vec<String> = Vec::with_capacity(names.len());
        for i in 0..k {
            fields.push(draws.intercepts[s][i].to_string());
        }
        for i in 0..k {
            for c in 0..p {
                fields.push(draws.theta[s][(c, i)].to_string());
            }
        }
        for v in &draws.alpha[s] {
            fields.push(v.to_string());
        }
        for v in &draws.sigma2[s] {
            fields.push(v.to_string());
        }
        for b in &draws.gamma[s] {
            fields.push(if *b { "1".into() } else { "0".into() });
        }
        for v in &draws.tau2[s] {
            fields.push(v.to_string());
        }
        for v in &draws.lambda2[s] {
            fields.push(v.to_string());
        }
        for v in &draws.pi0[s] {
            fields.push(v.to_string());
        }
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}

/// Posterior summary (mean, sd, quantiles) of the coefficient draws.
pub fn write_summary_csv(path: &Path, draws: &SurMidasDraws) -> Result<()> {
    let mut w = open_writer(path)?;
    writeln!(w, "parameter,mean,sd,q05,q50,q95")?;
    let n = draws.n_retained();
    let quantile = |sorted: &[f64], q: f64| -> f64 {
        let pos = q * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = pos - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    };
    let mut emit = |name: String, series: Vec<f64>| -> Result<()> {
        let mean = series.iter().sum::<f64>() / n as f64;
        let var = series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0).max(1.0);
        let mut sorted = series;
        sorted.sort_by(|a, b| a.total_cmp(b));
        writeln!(
            w,
            "{name},{mean},{},{},{},{}",
            var.sqrt(),
            quantile(&sorted, 0.05),
            quantile(&sorted, 0.50),
            quantile(&sorted, 0.95)
        )?;
        Ok(())
    };
    let p = draws.theta[0].nrows();
    for i in 0..draws.k {
        emit(
            format!("intercept[eq={}]", i + 1),
            (0..n).map(|s| draws.intercepts[s][i]).collect(),
        )?;
    }
    for i in 0..draws.k {
        for c in 0..p {
            emit(
                format!("theta[eq={},col={}]", i + 1, c + 1),
                (0..n).map(|s| draws.theta[s][(c, i)]).collect(),
            )?;
        }
    }
    for i in 0..draws.k {
        emit(format!("sigma2[eq={}]", i + 1), (0..n).map(|s| draws.sigma2[s][i]).collect())?;
    }
    Ok(())
}

/// Inclusion-probability table (the heat-map data): equation x group.
pub fn write_inclusion_csv(path: &Path, draws: &SurMidasDraws) -> Result<()> {
    let probs = draws.inclusion_probabilities();
    let mut w = open_writer(path)?;
    writeln!(w, "equation,group,name,probability")?;
    for i in 0..draws.k {
        for j in 0..draws.n_groups {
            writeln!(
                w,
                "{},{},{},{}",
                i + 1,
                j + 1,
                draws.layout.groups[j].name,
                probs[(i, j)]
            )?;
        }
    }
    Ok(())
}

// -------------------------------------------------------------- reports

/// Writes the audit log (`one entry per design row`).
pub fn write_audit_csv(path: &Path, audit: &[AuditRecord]) -> Result<()> {
    let mut w = open_writer(path)?;
    writeln!(
        w,
        "target_year,update,h_steps,model,row_period,max_hf_year,max_hf_quarter,origin_year,origin_quarter,max_factor_period"
    )?;
    for a in audit {
        let (hy, hq) = match a.max_hf_date {
            Some((y, q)) => (y.to_string(), q.to_string()),
            None => (String::new(), String::new()),
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            a.target_year,
            a.update_label,
            a.h_steps,
            a.model,
            a.row_period,
            hy,
            hq,
            a.origin.0,
            a.origin.1,
            a.max_factor_period.map(|v| v.to_string()).unwrap_or_default()
        )?;
    }
    Ok(())
}

/// Writes the accuracy report in the fixed column order.
pub fn write_report_csv(path: &Path, report: &EvalReport) -> Result<()> {
    let mut w = open_writer(path)?;
    w.write_all(report.to_csv().as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tmpdir(tag: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("distnow_io_{tag}_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn micro_roundtrip() {
        let dir = tmpdir("micro");
        let mut micro = BTreeMap::new();
        micro.insert(2000, vec![1.0, 2.5, 3.25]);
        micro.insert(2001, vec![-0.5, 4.0]);
        let path = dir.join("micro.csv");
        write_micro_csv(&path, &micro).unwrap();
        let back = read_micro_csv(&path).unwrap();
        assert_eq!(micro, back);
    }

    #[test]
    fn corrupted_micro_row_reports_the_line() {
        let dir = tmpdir("badmicro");
        let path = dir.join("micro.csv");
        std::fs::write(&path, "period,value\n2000,1.5\n2001,notanumber\n").unwrap();
        let err = read_micro_csv(&path).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn density_roundtrip() {
        let dir = tmpdir("density");
        let grid = SupportGrid::new(0.0, 10.0, 101).unwrap();
        let d = DensityOnGrid::new(grid, vec![1.0; 101]).unwrap();
        let path = dir.join("d.csv");
        write_density_csv(&path, &d).unwrap();
        let back = read_density_csv(&path).unwrap();
        assert_eq!(back.grid(), d.grid());
        for (a, b) in back.values().iter().zip(d.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn indicator_roundtrip_and_validation() {
        let dir = tmpdir("ind");
        let hf = DMatrix::from_fn(8, 2, |r, c| (r * 2 + c) as f64);
        let panel =
            MixedFrequencyPanel::new(hf, 4, vec![1990, 1991], vec!["a".into(), "b".into()])
                .unwrap();
        let path = dir.join("ind.csv");
        write_indicators_csv(&path, &panel).unwrap();
        let back = read_indicators_csv(&path).unwrap();
        assert_eq!(back.lf_periods, panel.lf_periods);
        assert_eq!(back.names, panel.names);
        assert_eq!(back.hf, panel.hf);

        // a year jump is a gap
        let broken = "date,a,b\n1990Q1,1,2\n1990Q2,1,2\n1990Q3,1,2\n1990Q4,1,2\n\
                      1992Q1,1,2\n1992Q2,1,2\n1992Q3,1,2\n1992Q4,1,2\n";
        std::fs::write(dir.join("broken.csv"), broken).unwrap();
        let err = read_indicators_csv(&dir.join("broken.csv")).unwrap_err();
        assert!(err.to_string().contains("gap"), "{err}");
        // a partial year is rejected
        let partial = "date,a,b\n1990Q1,1,2\n1990Q2,1,2\n1990Q3,1,2\n";
        std::fs::write(dir.join("partial.csv"), partial).unwrap();
        assert!(read_indicators_csv(&dir.join("partial.csv")).is_err());
    }

    #[test]
    fn transforms_apply_and_trim() {
        let hf = DMatrix::from_fn(8, 2, |r, _| (r + 1) as f64);
        let panel =
            MixedFrequencyPanel::new(hf, 4, vec![1990, 1991], vec!["lvl".into(), "gr".into()])
                .unwrap();
        let mut transforms = BTreeMap::new();
        transforms.insert("gr".to_string(), Transform::PctChange);
        let out = apply_transforms(&panel, &transforms).unwrap();
        // first year dropped
        assert_eq!(out.lf_periods, vec![1991]);
        assert_eq!(out.hf.nrows(), 4);
        // growth of the ramp 1..8 at row 4 (original index): 100*(6/5-1)
        assert_abs_diff_eq!(out.hf[(1, 1)], 100.0 * (6.0 / 5.0 - 1.0), epsilon = 1e-12);
        // level column preserved
        assert_abs_diff_eq!(out.hf[(0, 0)], 5.0, epsilon = 1e-12);
    }

    #[test]
    fn lqd_roundtrip() {
        let dir = tmpdir("lqd");
        let tau = TauGrid::new(0.01, 50).unwrap();
        let q = LqdCurve::new(tau, (0..50).map(|i| (i as f64).sin()).collect()).unwrap();
        let path = dir.join("q.csv");
        write_lqd_csv(&path, &q).unwrap();
        let back = read_lqd_csv(&path).unwrap();
        assert_eq!(back.tau_grid(), q.tau_grid());
        for (a, b) in back.values().iter().zip(q.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }
}
