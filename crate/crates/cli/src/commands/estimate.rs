//! `estimate`: run the KDE -> LQD -> FPCA -> design -> estimator chain
//! on a user bundle and persist draws and summaries.

use std::path::Path;

use distnow_core::bayes::{
    gibbs_run, ridge_estimate, ridge_ml_optimize, var_baseline, RidgeHyper, RidgePriorScales,
    SpikeSlabPrior, VarMode,
};
use distnow_core::error::{Error, Result};
use distnow_core::forecast::Estimator;
use distnow_core::io;
use distnow_core::midas::{build_design, DesignConfig, LagSpec};

use crate::commands::{common_years, factors_from_micro, load_bundle};
use crate::config::EstimateConfig;

pub fn run(cfg: &EstimateConfig, out: &Path) -> Result<()> {
    crate::config::require_path(&cfg.micro, "micro")?;
    crate::config::require_path(&cfg.indicators, "indicators")?;
    let estimator = Estimator::parse(&cfg.estimator)?;
    let support = cfg.support.build()?;
    let tau = cfg.tau.build()?;
    let bundle = load_bundle(
        &cfg.micro,
        &cfg.indicators,
        cfg.transforms.as_deref(),
    )?;
    let years = common_years(&bundle.micro, &bundle.indicators);
    if years.len() < cfg.p_q + 3 {
        return Err(Error::data(format!(
            "only {} overlapping periods between micro and indicators",
            years.len()
        )));
    }
    let (basis, factors) =
        factors_from_micro(&bundle.micro, &years, support, tau, cfg.bandwidth, cfg.k)?;

    std::fs::create_dir_all(out)?;
    io::write_basis_csv(&out.join("basis.csv"), &basis)?;
    io::write_basis_meta(&out.join("basis_meta.csv"), &basis)?;
    io::write_scores_csv(&out.join("factors.csv"), &factors)?;

    let spec = LagSpec::new(cfg.p_x, cfg.p_q, cfg.h_steps)?;
    let panel = {
        let mut p = bundle.indicators.clone();
        let rows = years.len() * p.m;
        p.hf = p.hf.rows(0, rows).into_owned();
        p.lf_periods = years.clone();
        p
    };

    match estimator {
        Estimator::SpikeSlab => {
            let dcfg = DesignConfig::restricted(cfg.almon.0, cfg.almon.1, &spec)?;
            let design = build_design(&panel, &factors, &spec, &dcfg)?;
            let mut prior = SpikeSlabPrior::default_for(cfg.k, cfg.seed);
            prior.gibbs = cfg.gibbs.build(cfg.seed)?;
            cfg.prior.apply(&mut prior);
            let draws = gibbs_run(&design, &prior)?;
            io::write_draws_csv(out, "draws", &draws)?;
            io::write_summary_csv(&out.join("summary.csv"), &draws)?;
            io::write_inclusion_csv(&out.join("inclusion.csv"), &draws)?;
        }
        Estimator::RidgeUnrestricted | Estimator::RidgeRestricted => {
            let restricted = matches!(estimator, Estimator::RidgeRestricted);
            let dcfg = if restricted {
                DesignConfig {
                    standardize: false,
                    ..DesignConfig::restricted(cfg.almon.0, cfg.almon.1, &spec)?
                }
            } else {
                DesignConfig { standardize: false, ..DesignConfig::unrestricted() }
            };
            let design = build_design(&panel, &factors, &spec, &dcfg)?;
            let scales = RidgePriorScales::from_data(&factors.scores, &panel.hf);
            let (hyper, log_ml) = ridge_ml_optimize(
                &design.z,
                &design.targets,
                &design.col_meta,
                &RidgeHyper::default(),
                &scales,
                restricted,
            )?;
            let post =
                ridge_estimate(&design.z, &design.targets, &design.col_meta, &hyper, &scales)?;
            write_ridge_summary(&out.join("summary.csv"), &post, log_ml)?;
        }
        Estimator::VarFlat(p) | Estimator::VarRidge(p) => {
            let mode = if matches!(estimator, Estimator::VarFlat(_)) {
                VarMode::Flat
            } else {
                VarMode::Ridge
            };
            let fit = var_baseline(&factors, p, mode)?;
            write_var_summary(&out.join("summary.csv"), &fit)?;
        }
    }
    Ok(())
}

fn write_ridge_summary(
    path: &Path,
    post: &distnow_core::bayes::RidgePosterior,
    log_ml: f64,
) -> Result<()> {
    use std::io::Write;
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "parameter,value")?;
    writeln!(w, "log_marginal_likelihood,{log_ml}")?;
    writeln!(w, "theta1,{}", post.hyper.theta1)?;
    writeln!(w, "theta2,{}", post.hyper.theta2)?;
    writeln!(w, "theta3,{}", post.hyper.theta3)?;
    writeln!(w, "theta4,{}", post.hyper.theta4)?;
    writeln!(w, "theta5,{}", post.hyper.theta5)?;
    for i in 0..post.phi_mean.nrows() {
        for k in 0..post.phi_mean.ncols() {
            writeln!(w, "phi_mean[row={}_eq={}],{}", i, k + 1, post.phi_mean[(i, k)])?;
        }
    }
    Ok(())
}

fn write_var_summary(path: &Path, fit: &distnow_core::bayes::VarFit) -> Result<()> {
    use std::io::Write;
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "parameter,value")?;
    writeln!(w, "order,{}", fit.p)?;
    if let Some(coefs) = &fit.coefs {
        for i in 0..coefs.nrows() {
            for k in 0..coefs.ncols() {
                writeln!(w, "coef[row={}_eq={}],{}", i, k + 1, coefs[(i, k)])?;
            }
        }
    }
    if let Some(post) = &fit.posterior {
        for i in 0..post.phi_mean.nrows() {
            for k in 0..post.phi_mean.ncols() {
                writeln!(w, "phi_mean[row={}_eq={}],{}", i, k + 1, post.phi_mean[(i, k)])?;
            }
        }
    }
    Ok(())
}
