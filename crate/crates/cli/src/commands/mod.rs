pub mod estimate;
pub mod evaluate;
pub mod mc_study;
pub mod nowcast;
pub mod simulate;

use std::collections::BTreeMap;
use std::path::Path;

use distnow_core::distribution::{kde_estimate, lqd_from_density, SupportGrid, TauGrid};
use distnow_core::error::Result;
use distnow_core::forecast::NowcastData;
use distnow_core::fpca::{fpca_of_panel, FactorSeries, FpcaBasis, LqdPanel};
use distnow_core::io;
use distnow_core::midas::MixedFrequencyPanel;

/// Loads the micro + indicator bundle, applying declared transforms.
pub fn load_bundle(
    micro: &Path,
    indicators: &Path,
    transforms: Option<&Path>,
) -> Result<NowcastData> {
    let micro = io::read_micro_csv(micro)?;
    let mut panel = io::read_indicators_csv(indicators)?;
    if let Some(tpath) = transforms {
        let map = io::read_transforms_csv(tpath)?;
        panel = io::apply_transforms(&panel, &map)?;
    }
    Ok(NowcastData { micro, indicators: panel })
}

/// KDE -> LQD -> FPCA over the given years of the bundle.
pub fn factors_from_micro(
    micro: &BTreeMap<i32, Vec<f64>>,
    years: &[i32],
    support: SupportGrid,
    tau: TauGrid,
    bandwidth: Option<f64>,
    k: usize,
) -> Result<(FpcaBasis, FactorSeries)> {
    let mut curves = Vec::with_capacity(years.len());
    for y in years {
        let samples = micro.get(y).ok_or_else(|| {
            distnow_core::Error::data(format!("no micro observations for period {y}"))
        })?;
        let dens = kde_estimate(samples, support, bandwidth)?;
        curves.push(lqd_from_density(&dens, tau)?);
    }
    let panel = LqdPanel::from_curves(&curves, years.to_vec())?;
    fpca_of_panel(&panel, k)
}

/// Years present in both the micro data and the indicator panel, in
/// panel order (they must be a leading contiguous run).
pub fn common_years(
    micro: &BTreeMap<i32, Vec<f64>>,
    panel: &MixedFrequencyPanel,
) -> Vec<i32> {
    panel
        .lf_periods
        .iter()
        .copied()
        .take_while(|y| micro.contains_key(y))
        .collect()
}
