//! TOML run manifests: schema-validated configs with every default
//! resolved and written back for provenance.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use distnow_core::bayes::GibbsConfig;
use distnow_core::distribution::{SupportGrid, TauGrid};
use distnow_core::error::{Error, Result};
use distnow_core::evaluation::QsMethod;
use distnow_core::forecast::Estimator;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lower: f64,
    pub upper: f64,
    pub n_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { lower: 0.0, upper: 10.0, n_points: 1001 }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<SupportGrid> {
        SupportGrid::new(self.lower, self.upper, self.n_points)
            .map_err(|e| Error::config(format!("support grid: {e}")))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauSpec {
    pub delta: f64,
    pub n_tau: usize,
}

impl Default for TauSpec {
    fn default() -> Self {
        TauSpec { delta: 0.005, n_tau: 1000 }
    }
}

impl TauSpec {
    pub fn build(&self) -> Result<TauGrid> {
        TauGrid::new(self.delta, self.n_tau).map_err(|e| Error::config(format!("tau grid: {e}")))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GibbsSpec {
    pub n_draws: usize,
    pub n_burn: usize,
    pub thin: usize,
}

impl Default for GibbsSpec {
    fn default() -> Self {
        GibbsSpec { n_draws: 2000, n_burn: 500, thin: 1 }
    }
}

impl GibbsSpec {
    pub fn build(&self, seed: u64) -> Result<GibbsConfig> {
        let cfg = GibbsConfig { n_draws: self.n_draws, n_burn: self.n_burn, thin: self.thin, seed };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn default_m() -> usize {
    4
}

fn default_k() -> usize {
    3
}

fn default_p_x() -> usize {
    24
}

fn default_p_q() -> usize {
    2
}

fn default_almon() -> (usize, usize) {
    (3, 2)
}

fn default_reps() -> usize {
    50
}

fn default_t() -> usize {
    120
}

fn default_draws_out() -> usize {
    1000
}

fn default_micro() -> usize {
    2000
}

fn default_estimators() -> Vec<String> {
    vec!["var".into(), "ridge".into(), "blasso".into()]
}

fn default_qs() -> String {
    "absolute".into()
}

/// Spike-and-slab prior knobs exposed through the manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriorSpec {
    /// Global degrees of freedom; `None` keeps the K + 5 default.
    pub v0: Option<f64>,
    /// Beta weight on exclusion; `None` keeps c = (1 + 1/G) G^nu.
    pub c: Option<f64>,
    pub d: f64,
    pub nu_exponent: f64,
    /// Gamma hyperparameters of the penalty prior.
    pub a2: f64,
    pub b2: f64,
    pub intercept_variance: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec {
            v0: None,
            c: None,
            d: 1.0,
            nu_exponent: 1.0,
            a2: 0.1,
            b2: 0.1,
            intercept_variance: 100.0,
        }
    }
}

impl PriorSpec {
    pub fn apply(&self, prior: &mut distnow_core::bayes::SpikeSlabPrior) {
        if let Some(v0) = self.v0 {
            prior.v0 = distnow_core::bayes::V0Rule::Global(v0);
        }
        prior.c = self.c;
        prior.d = self.d;
        prior.nu_exponent = self.nu_exponent;
        prior.lambda_mode =
            distnow_core::bayes::LambdaMode::HierarchicalGamma { a2: self.a2, b2: self.b2 };
        prior.intercept_variance = self.intercept_variance;
    }
}

/// `simulate`: write one synthetic world.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub t: usize,
    pub seed: u64,
    pub micro_per_period: usize,
    pub direct_density: bool,
    pub support: GridSpec,
    pub tau: TauSpec,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            t: default_t(),
            seed: 0,
            micro_per_period: default_micro(),
            direct_density: false,
            support: GridSpec::default(),
            tau: TauSpec::default(),
        }
    }
}

/// `estimate`: full-sample estimation of one model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub micro: PathBuf,
    pub indicators: PathBuf,
    #[serde(default)]
    pub transforms: Option<PathBuf>,
    #[serde(default = "default_blasso")]
    pub estimator: String,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_p_x")]
    pub p_x: usize,
    #[serde(default = "default_p_q")]
    pub p_q: usize,
    #[serde(default = "default_almon")]
    pub almon: (usize, usize),
    #[serde(default)]
    pub h_steps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub gibbs: GibbsSpec,
    #[serde(default)]
    pub prior: PriorSpec,
    #[serde(default)]
    pub support: GridSpec,
    #[serde(default)]
    pub tau: TauSpec,
    #[serde(default)]
    pub bandwidth: Option<f64>,
}

fn default_blasso() -> String {
    "blasso".into()
}

/// `nowcast`: the pseudo-real-time exercise.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NowcastCmdConfig {
    pub micro: PathBuf,
    pub indicators: PathBuf,
    #[serde(default)]
    pub transforms: Option<PathBuf>,
    /// Explicit target years; empty means the last `n_test_years`.
    #[serde(default)]
    pub target_years: Vec<i32>,
    #[serde(default = "default_test_years")]
    pub n_test_years: usize,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<String>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_p_x")]
    pub p_x: usize,
    #[serde(default = "default_p_q")]
    pub p_q: usize,
    #[serde(default = "default_almon")]
    pub almon: (usize, usize),
    #[serde(default)]
    pub anchor: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub gibbs: GibbsSpec,
    #[serde(default = "default_draws_out")]
    pub n_draws_out: usize,
    #[serde(default)]
    pub support: GridSpec,
    #[serde(default)]
    pub tau: TauSpec,
    #[serde(default)]
    pub bandwidth: Option<f64>,
    #[serde(default = "default_qs")]
    pub qs_method: String,
    #[serde(default = "default_min_rows")]
    pub min_estimation_rows: usize,
}

fn default_test_years() -> usize {
    5
}

fn default_min_rows() -> usize {
    10
}

/// `mc-study`: the replication study.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McStudyConfig {
    pub t: usize,
    pub reps: usize,
    pub seed: u64,
    pub estimators: Vec<String>,
    pub micro_per_period: usize,
    pub direct_density: bool,
    pub m: usize,
    pub n_x: usize,
    pub p_x: usize,
    pub p_q: usize,
    pub k: usize,
    pub rho: f64,
    pub mu_hf: f64,
    pub hf_cross_corr: f64,
    pub noise_to_signal: f64,
    pub weight_params: (f64, f64),
    pub support: GridSpec,
    pub tau: TauSpec,
}

impl Default for McStudyConfig {
    fn default() -> Self {
        McStudyConfig {
            t: default_t(),
            reps: default_reps(),
            seed: 0,
            estimators: default_estimators(),
            micro_per_period: default_micro(),
            direct_density: false,
            m: default_m(),
            n_x: 30,
            p_x: default_p_x(),
            p_q: default_p_q(),
            k: default_k(),
            rho: 0.5,
            mu_hf: 0.1,
            hf_cross_corr: 0.5,
            noise_to_signal: 0.2,
            weight_params: (0.05, -0.02),
            support: GridSpec::default(),
            tau: TauSpec::default(),
        }
    }
}

/// One `evaluate` cell: a prediction CSV scored against a truth CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateCell {
    pub pred: PathBuf,
    pub truth: PathBuf,
    pub model: String,
    #[serde(default = "default_h_label")]
    pub horizon: String,
    pub period: i32,
}

fn default_h_label() -> String {
    "h=0".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateConfig {
    pub cells: Vec<EvaluateCell>,
    #[serde(default = "default_qs")]
    pub qs_method: String,
    #[serde(default = "default_kl_direction")]
    pub kl_direction: String,
}

fn default_kl_direction() -> String {
    "truth-first".into()
}

/// The whole manifest; exactly one command section must be present for
/// the invoked subcommand.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<EstimateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nowcast: Option<NowcastCmdConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none", rename = "mc-study")]
    pub mc_study: Option<McStudyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluate: Option<EvaluateConfig>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::config(format!("invalid config: {e}")))
    }

    /// Serializes the fully resolved manifest back out for provenance.
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string_pretty(self)
            .map_err(|e| Error::config(format!("cannot serialize manifest: {e}")))?;
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        std::fs::write(path, text)?;
        Ok(())
    }
}

pub fn parse_estimators(names: &[String]) -> Result<Vec<Estimator>> {
    if names.is_empty() {
        return Err(Error::config("field 'estimators' must name at least one model"));
    }
    names.iter().map(|n| Estimator::parse(n)).collect()
}

pub fn parse_kl_direction(name: &str) -> Result<distnow_core::evaluation::KlDirection> {
    use distnow_core::evaluation::KlDirection;
    match name.to_ascii_lowercase().as_str() {
        "truth-first" | "truth_first" => Ok(KlDirection::TruthFirst),
        "pred-first" | "pred_first" => Ok(KlDirection::PredFirst),
        other => Err(Error::config(format!("field 'kl_direction': unknown value '{other}'"))),
    }
}

pub fn parse_qs_method(name: &str) -> Result<QsMethod> {
    match name.to_ascii_lowercase().as_str() {
        "absolute" | "abs" => Ok(QsMethod::AbsoluteError),
        "pinball" => Ok(QsMethod::Pinball),
        other => Err(Error::config(format!("field 'qs_method': unknown value '{other}'"))),
    }
}

pub fn require_path(path: &Path, field: &str) -> Result<()> {
    if !path.exists() {
        return Err(Error::config(format!(
            "field '{field}': path {} does not exist",
            path.display()
        )));
    }
    Ok(())
}
