//! `evaluate`: re-score stored prediction densities against realized
//! ones and assemble the accuracy table.

use std::path::Path;

use distnow_core::error::{Error, Result};
use distnow_core::evaluation::{assemble_report, score_cell, QS_LEVELS};
use distnow_core::io;

use crate::config::{parse_kl_direction, parse_qs_method, EvaluateConfig};

pub fn run(cfg: &EvaluateConfig, out: &Path) -> Result<()> {
    if cfg.cells.is_empty() {
        return Err(Error::config("field 'cells' must list at least one pair"));
    }
    let method = parse_qs_method(&cfg.qs_method)?;
    let direction = parse_kl_direction(&cfg.kl_direction)?;
    let mut cells = Vec::with_capacity(cfg.cells.len());
    for c in &cfg.cells {
        crate::config::require_path(&c.pred, "pred")?;
        crate::config::require_path(&c.truth, "truth")?;
        let pred = io::read_density_csv(&c.pred)?;
        let truth = io::read_density_csv(&c.truth)?;
        let truth = truth.regrid(*pred.grid())?;
        cells.push(score_cell(
            &c.model, &c.horizon, c.period, &pred, &truth, &QS_LEVELS, method, direction,
        )?);
    }
    let report = assemble_report(&cells, &QS_LEVELS)?;
    std::fs::create_dir_all(out)?;
    io::write_report_csv(&out.join("report.csv"), &report)?;
    Ok(())
}
