//! Run configuration: one JSON document per experiment run.

use std::fmt;
use std::path::{Path, PathBuf};

use ergoprop::environment::EnvironmentModel;
use ergoprop::superop::ContractionMode;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Verify,
    Kappa,
    Decay,
    Rankone,
    Mixing,
    Highprob,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Verify,
        Experiment::Kappa,
        Experiment::Decay,
        Experiment::Rankone,
        Experiment::Mixing,
        Experiment::Highprob,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Verify => "verify",
            Experiment::Kappa => "kappa",
            Experiment::Decay => "decay",
            Experiment::Rankone => "rankone",
            Experiment::Mixing => "mixing",
            Experiment::Highprob => "highprob",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub master: u64,
    pub count: usize,
}

impl Seeds {
    /// Realization seeds `master + k` for `k < count`.
    pub fn list(&self) -> Vec<u64> {
        (0..self.count as u64).map(|k| self.master.wrapping_add(k)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ContractionSpec {
    Sampled { n_pairs: usize, n_ascent: usize },
    GridD2 { resolution: usize },
}

impl Default for ContractionSpec {
    fn default() -> Self {
        ContractionSpec::Sampled { n_pairs: 24, n_ascent: 60 }
    }
}

impl ContractionSpec {
    pub fn mode(self) -> ContractionMode {
        match self {
            ContractionSpec::Sampled { n_pairs, n_ascent } => ContractionMode::Sampled { n_pairs, n_ascent },
            ContractionSpec::GridD2 { resolution } => ContractionMode::ExactGridD2 { resolution },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySpec {
    pub metric_pairs: usize,
    pub metric_tol: f64,
    pub partitions: usize,
    pub horizon: f64,
    pub composition_tol: f64,
    pub cptp_tol: f64,
    pub contraction_pairs: usize,
    pub contraction_slack: f64,
    pub pf_residual: f64,
    pub pf_lambda_tol: f64,
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self {
            metric_pairs: 200,
            metric_tol: 1e-9,
            partitions: 20,
            horizon: 4.0,
            composition_tol: 1e-10,
            cptp_tol: 1e-8,
            contraction_pairs: 50,
            contraction_slack: 5e-3,
            pf_residual: 1e-8,
            pf_lambda_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KappaSpec {
    pub separations: Vec<usize>,
    /// Least R² of the pooled log-linear fit; `null` skips the check.
    pub min_r2: Option<f64>,
    /// Largest slope IQR relative to `|median|`; `null` skips the check.
    pub max_iqr_ratio: Option<f64>,
}

impl Default for KappaSpec {
    fn default() -> Self {
        Self {
            separations: (4..=64).step_by(4).collect(),
            min_r2: Some(0.95),
            max_iqr_ratio: Some(0.2),
        }
    }
}

/// Which log-linear fit the decay check uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitScope {
    /// One fit over all `(seed, horizon)` points. Right for ergodic models.
    Pooled,
    /// One fit per seed, reporting the worst. Frozen disorder has a
    /// different rate on every seed.
    PerSeed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecaySpec {
    pub t: f64,
    pub horizons: Vec<f64>,
    pub min_r2: f64,
    pub fit_scope: FitScope,
    /// Diameters at or below this round-off level are left out of the fit.
    pub fit_floor: f64,
    pub slack: f64,
    /// For frozen disorder: largest `‖Z − R‖₁` at the deepest horizon.
    pub pf_tol: f64,
}

impl Default for DecaySpec {
    fn default() -> Self {
        Self {
            t: 0.0,
            horizons: (1..=16).map(|k| 4.0 * k as f64).collect(),
            min_r2: 0.95,
            fit_scope: FitScope::Pooled,
            fit_floor: 1e-12,
            slack: 1e-9,
            pf_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankOneSpec {
    pub s: f64,
    pub t_grid: Vec<f64>,
    pub n_states: usize,
    pub deepest: f64,
    /// Slack per unit of summed limit-state diameter.
    pub diameter_slack: f64,
}

impl Default for RankOneSpec {
    fn default() -> Self {
        Self {
            s: 0.0,
            t_grid: vec![1.5, 3.0, 5.0, 8.0, 12.0],
            n_states: 32,
            deepest: 48.0,
            diameter_slack: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixingSpec {
    pub n_grid: Vec<usize>,
    /// Least R² of the exponential fit, which must also have a negative rate;
    /// `null` only reports the fits.
    pub min_exp_r2: Option<f64>,
    pub pmf_count: usize,
    pub pmf_max_support: usize,
    pub pmf_tol: f64,
    pub proxy_grid: Vec<usize>,
}

impl Default for MixingSpec {
    fn default() -> Self {
        Self {
            n_grid: (1..=24).collect(),
            min_exp_r2: Some(0.95),
            pmf_count: 500,
            pmf_max_support: 6,
            pmf_tol: 1e-12,
            proxy_grid: vec![2, 3, 4, 6, 8],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HighProbSpec {
    pub s: f64,
    pub separations: Vec<f64>,
    pub a_schedule: Vec<f64>,
    pub deepest: f64,
}

impl Default for HighProbSpec {
    fn default() -> Self {
        Self {
            s: 0.0,
            separations: vec![2.0, 4.0, 8.0, 16.0],
            a_schedule: (1..=8).map(|k| 0.5f64.powi(k)).collect(),
            deepest: 48.0,
        }
    }
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub experiment: Experiment,
    pub dim: usize,
    pub model: EnvironmentModel,
    pub seeds: Seeds,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub contraction: ContractionSpec,
    #[serde(default)]
    pub verify: VerifySpec,
    #[serde(default)]
    pub kappa: KappaSpec,
    #[serde(default)]
    pub decay: DecaySpec,
    #[serde(default)]
    pub rankone: RankOneSpec,
    #[serde(default)]
    pub mixing: MixingSpec,
    #[serde(default)]
    pub highprob: HighProbSpec,
}

fn increasing<T: PartialOrd>(v: &[T]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

fn invalid(path: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        path: path.into(),
        message: msg.into(),
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::Invalid {
                path,
                message: e.into_inner().to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    /// Checks that the type system cannot express.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        if self.dim != self.model.dim() {
            return Err(invalid("dim", format!("{} but the model has dimension {}", self.dim, self.model.dim())));
        }
        if self.seeds.count == 0 {
            return Err(invalid("seeds.count", "must be positive"));
        }
        match self.contraction {
            ContractionSpec::GridD2 { resolution } => {
                if self.dim != 2 {
                    return Err(invalid("contraction.mode", "grid_d2 needs dim = 2"));
                }
                if resolution < 2 {
                    return Err(invalid("contraction.resolution", "must be at least 2"));
                }
            }
            ContractionSpec::Sampled { n_pairs, .. } => {
                if n_pairs == 0 {
                    return Err(invalid("contraction.n_pairs", "must be positive"));
                }
            }
        }
        match self.experiment {
            Experiment::Verify => {
                let v = &self.verify;
                if !(v.horizon > 0.0) {
                    return Err(invalid("verify.horizon", "must be positive"));
                }
            }
            Experiment::Kappa => {
                let k = &self.kappa.separations;
                if k.len() < 5 || k[0] == 0 || !increasing(k) {
                    return Err(invalid("kappa.separations", "need at least 5 positive increasing entries"));
                }
            }
            Experiment::Decay => {
                let h = &self.decay.horizons;
                if h.len() < 2 || !(h[0] > 0.0) || !increasing(h) {
                    return Err(invalid("decay.horizons", "need at least 2 positive increasing entries"));
                }
            }
            Experiment::Rankone => {
                let r = &self.rankone;
                if r.t_grid.is_empty() || !(r.t_grid[0] > r.s) || !increasing(&r.t_grid) {
                    return Err(invalid("rankone.t_grid", "must increase and start after s"));
                }
                if !(r.deepest > 0.0) {
                    return Err(invalid("rankone.deepest", "must be positive"));
                }
            }
            Experiment::Mixing => {
                let m = &self.mixing;
                if m.n_grid.is_empty() || m.n_grid[0] == 0 || !increasing(&m.n_grid) {
                    return Err(invalid("mixing.n_grid", "must be positive and increasing"));
                }
                if m.proxy_grid.is_empty() || m.proxy_grid[0] == 0 || !increasing(&m.proxy_grid) {
                    return Err(invalid("mixing.proxy_grid", "must be positive and increasing"));
                }
                if !(2..=ergoprop::mixing::MAX_SUPPORT).contains(&m.pmf_max_support) {
                    return Err(invalid("mixing.pmf_max_support", "must lie in 2..=12"));
                }
                if self.seeds.count < 100 {
                    return Err(invalid("seeds.count", "mixing needs at least 100 seeds"));
                }
            }
            Experiment::Highprob => {
                let h = &self.highprob;
                if h.separations.is_empty() || h.separations.iter().any(|&s| !(s > 1.0)) {
                    return Err(invalid("highprob.separations", "every separation must exceed 1"));
                }
                if h.a_schedule.is_empty() || h.a_schedule.iter().any(|&a| !(a > 0.0)) {
                    return Err(invalid("highprob.a_schedule", "thresholds must be positive"));
                }
                if self.seeds.count < 2 {
                    return Err(invalid("seeds.count", "highprob needs at least 2 seeds"));
                }
            }
        }
        Ok(())
    }
}
