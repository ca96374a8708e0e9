//! `simulate`: write one synthetic world (indicators, micro samples,
//! basis, factors, densities) plus the resolved manifest.

use std::collections::BTreeMap;
use std::path::Path;

use distnow_core::error::Result;
use distnow_core::io;
use distnow_core::monte_carlo::{prepare_dgp, simulate_world, DgpConfig};

use crate::config::SimulateConfig;

pub fn run(cfg: &SimulateConfig, out: &Path) -> Result<()> {
    let dgp = DgpConfig {
        t: cfg.t,
        seed: cfg.seed,
        micro_per_period: cfg.micro_per_period,
        direct_density: cfg.direct_density,
        support: cfg.support.build()?,
        tau: cfg.tau.build()?,
        ..DgpConfig::default()
    };
    if dgp.t == 0 {
        return Err(distnow_core::Error::config("field 't' must be positive"));
    }
    let ctx = prepare_dgp(&dgp)?;
    let world = simulate_world(&dgp, &ctx, cfg.seed)?;

    std::fs::create_dir_all(out)?;
    io::write_indicators_csv(&out.join("indicators.csv"), &world.hf_panel)?;
    if !cfg.direct_density {
        let mut micro = BTreeMap::new();
        for (t, samples) in world.micro.iter().enumerate() {
            micro.insert(world.hf_panel.lf_periods[t], samples.clone());
        }
        io::write_micro_csv(&out.join("micro.csv"), &micro)?;
    }
    io::write_basis_csv(&out.join("basis_true.csv"), &ctx.basis)?;
    io::write_basis_meta(&out.join("basis_true_meta.csv"), &ctx.basis)?;
    io::write_scores_csv(&out.join("factors_true.csv"), &world.factors)?;
    for (t, dens) in world.densities.iter().enumerate() {
        let label = world.hf_panel.lf_periods[t];
        io::write_density_csv(&out.join(format!("densities/period_{label}.csv")), dens)?;
    }
    Ok(())
}
