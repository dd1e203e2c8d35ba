//! Declarative run configuration (TOML, versioned schema).
//!
//! Unknown keys are rejected everywhere. Paths inside the file resolve
//! relative to the file's own directory, and the `CSGE_SEED` environment
//! variable overrides the configured seed.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use csge_core::{
    CsgeConfig, EstimatorSpec, ObjectiveConfig, Scorer, SoftGateConfig, TrainingProtocol,
    WeightingConfig,
};

use crate::CliError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub task: TaskKind,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub data: DataSection,
    pub members: Vec<EstimatorSpec>,
    #[serde(default)]
    pub folds: FoldsSection,
    #[serde(default)]
    pub objective: ObjectiveConfig,
    #[serde(default)]
    pub weighting: WeightingConfig,
    #[serde(default)]
    pub gate: SoftGateConfig,
    #[serde(default)]
    pub scorer: Option<String>,
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Regression,
    Classification,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub train: PathBuf,
    pub target: String,
    #[serde(default)]
    pub lead_time: Option<String>,
    #[serde(default)]
    pub sample_id: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FoldsSection {
    pub protocol: String,
    pub k: usize,
    pub holdout_fraction: f64,
}

impl Default for FoldsSection {
    fn default() -> Self {
        FoldsSection {
            protocol: "k_fold".into(),
            k: 5,
            holdout_fraction: 0.25,
        }
    }
}

impl RunConfig {
    /// Loads and validates a config file. Missing or malformed files are
    /// usage errors.
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config `{}`: {e}", path.display())))?;
        let mut config: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config `{}`: {e}", path.display())))?;
        if config.version != CONFIG_VERSION {
            return Err(CliError::Usage(format!(
                "config version {} is not supported (expected {CONFIG_VERSION})",
                config.version
            )));
        }
        if config.members.len() < 2 {
            return Err(CliError::Usage(format!(
                "an ensemble needs at least 2 members, config lists {}",
                config.members.len()
            )));
        }
        if let Ok(seed) = std::env::var("CSGE_SEED") {
            config.seed = seed
                .parse()
                .map_err(|_| CliError::Usage(format!("CSGE_SEED=`{seed}` is not an integer")))?;
        }

        // resolve data paths relative to the config file
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        if config.data.train.is_relative() {
            config.data.train = base.join(&config.data.train);
        }
        if let Some(dir) = &config.output_dir {
            if dir.is_relative() {
                config.output_dir = Some(base.join(dir));
            }
        }
        Ok(config)
    }

    pub fn scorer(&self) -> Result<Scorer, CliError> {
        match &self.scorer {
            Some(name) => Scorer::from_name(name).map_err(|e| CliError::Usage(e.to_string())),
            None => Ok(match self.task {
                TaskKind::Regression => Scorer::SquaredError,
                TaskKind::Classification => Scorer::ZeroOneError,
            }),
        }
    }

    pub fn protocol(&self) -> Result<TrainingProtocol, CliError> {
        match self.folds.protocol.as_str() {
            "k_fold" => Ok(TrainingProtocol::KFold { folds: self.folds.k }),
            "holdout" => Ok(TrainingProtocol::Holdout {
                fraction: self.folds.holdout_fraction,
            }),
            other => Err(CliError::Usage(format!(
                "unknown fold protocol `{other}` (expected k_fold or holdout)"
            ))),
        }
    }

    pub fn csge_config(&self) -> Result<CsgeConfig, CliError> {
        Ok(CsgeConfig {
            protocol: self.protocol()?,
            objective: self.objective,
            weighting: self.weighting,
            gate: self.gate,
            scorer: self.scorer()?,
            seed: self.seed,
        })
    }
}
