use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::config::Resolved;
use crate::error::CliError;

#[derive(Debug, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Record of one run, written as `manifest.json`.
///
/// Everything except `timings` is a function of the inputs, config and seed.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub inputs: Vec<PathBuf>,
    pub config: Resolved,
    pub timings: Vec<StageTiming>,
    pub outputs: Vec<PathBuf>,
    pub details: serde_json::Value,
}

impl RunManifest {
    pub fn new(command: &'static str, config: Resolved, inputs: &[&Path]) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            seed: config.solver.seed,
            inputs: inputs.iter().map(|p| p.to_path_buf()).collect(),
            config,
            timings: Vec::new(),
            outputs: Vec::new(),
            details: serde_json::Value::Null,
        }
    }

    /// Runs `f`, recording its wall time under `stage`.
    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings.push(StageTiming {
            stage: stage.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }

    pub fn write_json<T: Serialize>(&mut self, dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
        let path = dir.join(name);
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        self.outputs.push(path);
        Ok(())
    }

    pub fn write_text(&mut self, dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        self.outputs.push(path);
        Ok(())
    }

    pub fn write_png(&mut self, dir: &Path, name: &str, img: &qkp_core::pipeline::Image) -> Result<(), CliError> {
        let path = dir.join(name);
        img.save(&path).map_err(|e| CliError::io(&path, e))?;
        self.outputs.push(path);
        Ok(())
    }

    /// Writes the manifest itself; it lists itself last.
    pub fn finish(mut self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join("manifest.json");
        self.outputs.push(path.clone());
        let mut text = serde_json::to_string_pretty(&self).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }
}
