use std::path::Path;

use qkp_core::pipeline::{MatchExperimentConfig, PipelineConfig};
use qkp_core::solvers::SolverConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Contents of a `--config` TOML file. Every section is optional.
///
/// ```toml
/// preset = "digital"
///
/// [solver]          # fields override the preset
/// sa_sweeps = 500
///
/// [pipeline]
/// patch_grid = [2, 2]
///
/// [[pipeline.levels]]
/// regroup = [1, 1]
/// k = 3
///
/// [matching]
/// keypoints = 8
/// ```
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub preset: Option<String>,
    pub solver: toml::Table,
    pub pipeline: Option<PipelineConfig>,
    pub matching: Option<MatchExperimentConfig>,
}

/// Fully resolved configuration, recorded in the run manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub solver: SolverConfig,
    pub pipeline: PipelineConfig,
    pub matching: MatchExperimentConfig,
}

pub const DEFAULT_PRESET: &str = "digital";

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Starts from the named preset (file, then `preset_override`, then
    /// [`DEFAULT_PRESET`]) and applies the `[solver]` table on top.
    pub fn resolve(&self, preset_override: Option<&str>) -> Result<Resolved, CliError> {
        let name = preset_override.or(self.preset.as_deref()).unwrap_or(DEFAULT_PRESET);
        let preset = SolverConfig::preset(name).map_err(|e| CliError::Config(e.to_string()))?;
        let mut table = toml::Table::try_from(&preset).map_err(|e| CliError::Config(e.to_string()))?;
        for (k, v) in &self.solver {
            table.insert(k.clone(), v.clone());
        }
        let solver: SolverConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(format!("[solver]: {e}")))?;
        Ok(Resolved {
            solver,
            pipeline: self.pipeline.clone().unwrap_or_default(),
            matching: self.matching.clone().unwrap_or_default(),
        })
    }
}
