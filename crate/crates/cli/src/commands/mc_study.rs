//! `mc-study`: the replication study with the accuracy table and a
//! per-replication audit file.

use std::io::Write;
use std::path::Path;

use distnow_core::distribution::MomentField;
use distnow_core::error::Result;
use distnow_core::io;
use distnow_core::monte_carlo::{run_mc_study, DgpConfig};

use crate::config::{parse_estimators, McStudyConfig};

pub fn run(cfg: &McStudyConfig, out: &Path) -> Result<()> {
    if cfg.reps < 1 {
        return Err(distnow_core::Error::config("field 'reps' must be >= 1"));
    }
    if cfg.t == 0 {
        return Err(distnow_core::Error::config("field 't' must be positive"));
    }
    let estimators = parse_estimators(&cfg.estimators)?;
    let dgp = DgpConfig {
        t: cfg.t,
        reps: cfg.reps,
        seed: cfg.seed,
        micro_per_period: cfg.micro_per_period,
        direct_density: cfg.direct_density,
        m: cfg.m,
        n_x: cfg.n_x,
        p_x: cfg.p_x,
        p_q: cfg.p_q,
        k: cfg.k,
        rho: cfg.rho,
        mu_hf: cfg.mu_hf,
        hf_cross_corr: cfg.hf_cross_corr,
        noise_to_signal: cfg.noise_to_signal,
        weight_params: cfg.weight_params,
        support: cfg.support.build()?,
        tau: cfg.tau.build()?,
        ..DgpConfig::default()
    };
    let output = run_mc_study(&dgp, &estimators)?;

    std::fs::create_dir_all(out)?;
    io::write_report_csv(&out.join("table1.csv"), &output.report)?;

    // per-replication long-format records
    let mut w = std::io::BufWriter::new(std::fs::File::create(out.join("replications.csv"))?);
    write!(w, "rep,model,kl,hd")?;
    for (l, _) in &output.records[0].cell.qs {
        write!(w, ",qs{}", (l * 100.0).round() as i64)?;
    }
    for f in MomentField::ALL {
        write!(w, ",pred_{}", f.label().to_lowercase())?;
        write!(w, ",truth_{}", f.label().to_lowercase())?;
    }
    writeln!(w)?;
    for rec in &output.records {
        write!(w, "{},{},{},{}", rec.rep, rec.cell.model, rec.cell.kl, rec.cell.hd)?;
        for (_, v) in &rec.cell.qs {
            write!(w, ",{v}")?;
        }
        for f in MomentField::ALL {
            let fmt = |o: Option<f64>| o.map(|v| v.to_string()).unwrap_or_default();
            write!(w, ",{}", fmt(rec.cell.pred_moments.get(f)))?;
            write!(w, ",{}", fmt(rec.cell.truth_moments.get(f)))?;
        }
        writeln!(w)?;
    }

    if let Some(inc) = &output.mean_inclusion {
        let mut iw =
            std::io::BufWriter::new(std::fs::File::create(out.join("inclusion_mean.csv"))?);
        writeln!(iw, "equation,group,probability")?;
        for i in 0..inc.nrows() {
            for j in 0..inc.ncols() {
                writeln!(iw, "{},{},{}", i + 1, j + 1, inc[(i, j)])?;
            }
        }
    }

    let mut flog = std::io::BufWriter::new(std::fs::File::create(out.join("failures.txt"))?);
    writeln!(flog, "excluded_replications,{}", output.failures.len())?;
    for (rep, msg) in &output.failures {
        writeln!(flog, "{rep},{msg}")?;
    }
    Ok(())
}
