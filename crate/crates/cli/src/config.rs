//! JSON experiment manifests. A config file pins the problem source,
//! regularizer, solver list and stop rule so a run is reproducible from
//! the manifest alone; command-line flags override the output and data
//! directories, the parallelism and the seed base.

use serde::Deserialize;

use crate::CliError;
use sansolve::model::{Loss, RegKind, Regularizer};
use sansolve::solvers::{SolverConfig, SolverKind, StopRule};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum ProblemSpec {
    Synthetic {
        n: usize,
        d: usize,
        seed: u64,
        #[serde(default = "default_margin")]
        margin_scale: f64,
    },
    Libsvm {
        path: String,
        #[serde(default = "default_true")]
        add_intercept: bool,
        #[serde(default = "default_true")]
        map_labels: bool,
    },
}

#[derive(Debug, Clone, Copy, Deserialize, Default, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum LossSpec {
    #[default]
    Logistic,
    Squared,
}

impl From<LossSpec> for Loss {
    fn from(spec: LossSpec) -> Loss {
        match spec {
            LossSpec::Logistic => Loss::Logistic,
            LossSpec::Squared => Loss::Squared,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegSpec {
    #[serde(default)]
    pub kind: RegKindSpec,
    /// Regularization weight; omitted means `1/n`.
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

impl Default for RegSpec {
    fn default() -> Self {
        RegSpec {
            kind: RegKindSpec::L2,
            lambda: None,
            delta: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Default, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum RegKindSpec {
    #[default]
    L2,
    PseudoHuber,
}

impl RegSpec {
    pub fn build(&self, n: usize) -> Result<Regularizer, CliError> {
        let lambda = self.lambda.unwrap_or(1.0 / n as f64);
        let kind = match self.kind {
            RegKindSpec::L2 => RegKind::L2,
            RegKindSpec::PseudoHuber => RegKind::PseudoHuber { delta: self.delta },
        };
        Regularizer::new(kind, lambda).map_err(|e| CliError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub kind: String,
    #[serde(default)]
    pub gamma: Option<f64>,
    /// Step size as a multiple of `1/L_max` (SAG/SVRG only).
    #[serde(default)]
    pub gamma_scale: Option<f64>,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub svrg_inner: Option<usize>,
}

impl SolverSpec {
    pub fn kind(&self) -> Result<SolverKind, CliError> {
        self.kind.parse().map_err(CliError::Config)
    }

    pub fn build(&self, lmax: f64, seed: u64) -> Result<SolverConfig, CliError> {
        let kind = self.kind()?;
        let mut cfg = SolverConfig::new(kind).seed(seed);
        if let Some(g) = self.gamma {
            cfg.gamma = Some(g);
        }
        if let Some(scale) = self.gamma_scale {
            if kind.is_newton_family() {
                return Err(CliError::Config(
                    "gamma_scale only applies to sag/svrg".into(),
                ));
            }
            if self.gamma.is_some() {
                return Err(CliError::Config(
                    "give either gamma or gamma_scale, not both".into(),
                ));
            }
            cfg.gamma = Some(scale / lmax);
        }
        cfg.p = self.p;
        cfg.svrg_inner = self.svrg_inner;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopSpec {
    #[serde(default = "default_grad_tol")]
    pub grad_tol: f64,
    #[serde(default = "default_max_passes")]
    pub max_passes: f64,
}

impl Default for StopSpec {
    fn default() -> Self {
        StopSpec {
            grad_tol: default_grad_tol(),
            max_passes: default_max_passes(),
        }
    }
}

impl From<StopSpec> for StopRule {
    fn from(s: StopSpec) -> StopRule {
        StopRule {
            grad_tol: s.grad_tol,
            max_passes: s.max_passes,
        }
    }
}

/// Hyperparameter sweep: the averaging probability runs over multiples
/// of `1/n`, the step size over absolute values for the Newton family
/// and over multiples of `1/L_max` for SAG/SVRG.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub solver: String,
    #[serde(default = "default_p_grid")]
    pub p_grid_over_n: Vec<f64>,
    #[serde(default)]
    pub gamma_grid: Option<Vec<f64>>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
}

pub fn default_newton_gamma_grid() -> Vec<f64> {
    vec![0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3]
}

pub fn default_baseline_gamma_grid() -> Vec<f64> {
    vec![0.1, 0.2, 1.0 / 3.0, 0.5, 1.0, 2.0, 5.0]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum MatrixSpec {
    Diag { entries: Vec<f64> },
    RandomSpd { dim: usize, seed: u64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSpec {
    pub matrix: MatrixSpec,
    #[serde(default = "default_sketch")]
    pub sketch: String,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_slack")]
    pub slack: f64,
    #[serde(default = "default_rate_seed")]
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    #[serde(default)]
    pub loss: LossSpec,
    #[serde(default)]
    pub regularizer: RegSpec,
    #[serde(default)]
    pub solvers: Vec<SolverSpec>,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(default = "default_seed_base")]
    pub seed_base: u64,
    #[serde(default)]
    pub stop: StopSpec,
    #[serde(default = "default_checkpoint")]
    pub checkpoint_every: f64,
    #[serde(default)]
    pub out_dir: Option<String>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub rate: Option<RateSpec>,
}

impl ExperimentConfig {
    pub fn from_path(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
    }
}

fn default_true() -> bool {
    true
}
fn default_margin() -> f64 {
    1.0
}
fn default_delta() -> f64 {
    1.0
}
fn default_grad_tol() -> f64 {
    1e-6
}
fn default_max_passes() -> f64 {
    50.0
}
fn default_seeds() -> usize {
    10
}
fn default_seed_base() -> u64 {
    1
}
fn default_checkpoint() -> f64 {
    1.0
}
fn default_p_grid() -> Vec<f64> {
    vec![0.5, 1.0, 10.0, 100.0, 1000.0]
}
fn default_threshold() -> f64 {
    1e-4
}
fn default_repeats() -> usize {
    5
}
fn default_sketch() -> String {
    "coordinate".into()
}
fn default_steps() -> usize {
    20
}
fn default_trials() -> usize {
    2000
}
fn default_gamma() -> f64 {
    1.0
}
fn default_slack() -> f64 {
    0.05
}
fn default_rate_seed() -> u64 {
    0
}
