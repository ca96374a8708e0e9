//! `nowcast`: the four-update pseudo-real-time exercise over a bundle.

use std::io::Write;
use std::path::Path;

use distnow_core::distribution::kde_estimate;
use distnow_core::error::{Error, Result};
use distnow_core::forecast::{run_nowcast_exercise, NowcastConfig, NowcastSchedule};
use distnow_core::io;

use crate::commands::load_bundle;
use crate::config::{parse_estimators, parse_qs_method, NowcastCmdConfig};

pub fn run(cfg: &NowcastCmdConfig, out: &Path) -> Result<()> {
    crate::config::require_path(&cfg.micro, "micro")?;
    crate::config::require_path(&cfg.indicators, "indicators")?;
    let estimators = parse_estimators(&cfg.estimators)?;
    let bundle = load_bundle(&cfg.micro, &cfg.indicators, cfg.transforms.as_deref())?;

    let years: Vec<i32> = bundle.indicators.lf_periods.clone();
    let target_years: Vec<i32> = if cfg.target_years.is_empty() {
        if cfg.n_test_years == 0 || cfg.n_test_years >= years.len() {
            return Err(Error::config(
                "field 'n_test_years' must be positive and leave an estimation window",
            ));
        }
        years[years.len() - cfg.n_test_years..].to_vec()
    } else {
        cfg.target_years.clone()
    };
    let schedule = NowcastSchedule::standard(target_years);

    let run_cfg = NowcastConfig {
        support: cfg.support.build()?,
        tau: cfg.tau.build()?,
        k: cfg.k,
        p_x: cfg.p_x,
        p_q: cfg.p_q,
        almon: cfg.almon,
        anchor: cfg.anchor,
        bandwidth: cfg.bandwidth,
        gibbs: cfg.gibbs.build(cfg.seed)?,
        n_draws_out: cfg.n_draws_out,
        qs_method: parse_qs_method(&cfg.qs_method)?,
        seed: cfg.seed,
        min_estimation_rows: cfg.min_estimation_rows,
    };
    let output = run_nowcast_exercise(&bundle, &schedule, &estimators, &run_cfg)?;

    std::fs::create_dir_all(out)?;
    io::write_report_csv(&out.join("report.csv"), &output.report)?;
    io::write_audit_csv(&out.join("audit.csv"), &output.audit)?;
    let mut skiplog = std::io::BufWriter::new(std::fs::File::create(out.join("skipped.txt"))?);
    for s in &output.skipped {
        writeln!(skiplog, "{s}")?;
    }

    // per-cell forecasts and predicted-vs-actual overlays
    for (model, fc) in &output.forecasts {
        let slug: String = model
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
            .collect();
        let name = format!("forecasts/{slug}_y{}_h{}.csv", fc.period, fc.h_steps);
        let truth = bundle
            .micro
            .get(&fc.period)
            .map(|samples| kde_estimate(samples, run_cfg.support, run_cfg.bandwidth))
            .transpose()?;
        let path = out.join(&name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut w = std::io::BufWriter::new(std::fs::File::create(&path)?);
        match truth {
            Some(t) => {
                writeln!(w, "grid_point,predicted,actual")?;
                for i in 0..run_cfg.support.n_points() {
                    writeln!(
                        w,
                        "{},{},{}",
                        run_cfg.support.point(i),
                        fc.density_point.values()[i],
                        t.values()[i]
                    )?;
                }
            }
            None => {
                writeln!(w, "grid_point,predicted")?;
                for i in 0..run_cfg.support.n_points() {
                    writeln!(
                        w,
                        "{},{}",
                        run_cfg.support.point(i),
                        fc.density_point.values()[i]
                    )?;
                }
            }
        }
    }
    Ok(())
}
