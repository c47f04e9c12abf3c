//! Image pipeline: preprocessing, patch hierarchy, descriptors, the rotated
//! matching experiment and rendering.

mod descriptor;
mod fixtures;
mod hierarchy;
mod preprocess;
mod render;
mod rotation;

pub use descriptor::{compute_descriptor, DESCRIPTOR_LEN};
pub use fixtures::{constant_image, synthetic_scene, vertical_step};
pub use hierarchy::{hierarchical_extract, Extraction, Keypoint, LevelReport};
pub use preprocess::{
    downsample_area, load_and_preprocess, load_image, pixel_vector, split_patches, Patch, PixelVector, Preprocessed,
};
pub use image::RgbImage as Image;
pub use render::{heat_color, render_heatmap, render_matches, render_overlay};
pub use rotation::{
    describe_and_compare, matching_experiment, rotate_image, rotated_matching_experiment, AlphaRun, MatchExperiment,
    MatchExperimentConfig,
};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::{ClusteringError, ClusteringMethod, ClusteringSpec};
use crate::kernels::{GaussianKernel, Kernel, KernelError, NormalizedInnerProduct};
use crate::matching::MatchingError;
use crate::quantum::{FeatureMapSpec, QuantumError, QuantumKernel};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot decode image {path}: {message}")]
    Decode { path: PathBuf, message: String },
    #[error("invalid pipeline config: {0}")]
    Config(String),
    #[error(transparent)]
    Clustering(#[from] ClusteringError),
    #[error(transparent)]
    Matching(#[from] MatchingError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

/// Kernel selection for configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum KernelChoice {
    Gaussian {
        #[serde(default = "one")]
        gamma: f64,
    },
    Cosine,
    Quantum {
        #[serde(default = "one")]
        scale: f64,
        /// Sampled readout with this many shots; exact when absent.
        #[serde(default)]
        shots: Option<u64>,
        #[serde(default)]
        seed: u64,
    },
}

fn one() -> f64 {
    1.0
}

impl Default for KernelChoice {
    fn default() -> Self {
        Self::Gaussian { gamma: 1.0 }
    }
}

impl KernelChoice {
    /// Instantiates the kernel for inputs of length `dim` (the qubit count
    /// for the quantum kernel).
    pub fn build(&self, dim: usize) -> Result<Box<dyn Kernel>, PipelineError> {
        Ok(match *self {
            Self::Gaussian { gamma } => Box::new(GaussianKernel::new(gamma)?),
            Self::Cosine => Box::new(NormalizedInnerProduct),
            Self::Quantum { scale, shots, seed } => {
                let spec = FeatureMapSpec::all_pairs(dim).with_scale(scale);
                match shots {
                    None => Box::new(QuantumKernel::exact(spec)?),
                    Some(shots) => Box::new(QuantumKernel::sampled(spec, shots, seed)?),
                }
            }
        })
    }
}

/// One level of the extraction hierarchy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelConfig {
    /// Groups of the previous level merged into one set, as `[cols, rows]`.
    /// Must be `[1, 1]` at level 0, where every patch is its own set.
    pub regroup: [usize; 2],
    /// Keypoints selected per set.
    pub k: usize,
    #[serde(default = "default_method")]
    pub method: ClusteringMethod,
    #[serde(default)]
    pub kernel: KernelChoice,
    /// Multiplier overrides; unset values take [`ClusteringSpec::balanced`].
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub lambda: Option<f64>,
}

fn default_method() -> ClusteringMethod {
    ClusteringMethod::Kdc
}

impl LevelConfig {
    pub fn new(regroup: [usize; 2], k: usize) -> Self {
        Self {
            regroup,
            k,
            method: default_method(),
            kernel: KernelChoice::default(),
            alpha: None,
            beta: None,
            gamma: None,
            lambda: None,
        }
    }

    /// Multipliers for a set of `n` candidates.
    pub fn clustering_spec(&self, n: usize) -> ClusteringSpec {
        let base = ClusteringSpec::balanced(self.k, n);
        ClusteringSpec {
            k: self.k,
            alpha: self.alpha.unwrap_or(base.alpha),
            beta: self.beta.unwrap_or(base.beta),
            gamma: self.gamma.unwrap_or(base.gamma),
            lambda: self.lambda.unwrap_or(base.lambda),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Downsampling target `[width, height]`; `None` keeps the input size.
    pub target_size: Option<[usize; 2]>,
    /// Level-0 patch grid `[cols, rows]`.
    pub patch_grid: [usize; 2],
    /// Weight applied to normalized positions before the vector is
    /// normalized.
    pub location_weight: f64,
    pub levels: Vec<LevelConfig>,
}

impl Default for PipelineConfig {
    /// 928×704 pixels, 32×32 patches of 29×22, then 10 → 20 → 45 keypoints
    /// per set over 1024 → 64 → 4 sets.
    fn default() -> Self {
        Self {
            target_size: Some([928, 704]),
            patch_grid: [32, 32],
            location_weight: 0.25,
            levels: vec![
                LevelConfig::new([1, 1], 10),
                LevelConfig::new([4, 4], 20),
                LevelConfig::new([4, 4], 45),
            ],
        }
    }
}

impl PipelineConfig {
    /// One level with a single patch covering the whole image.
    pub fn single_level(k: usize) -> Self {
        Self {
            target_size: None,
            patch_grid: [1, 1],
            location_weight: 0.25,
            levels: vec![LevelConfig::new([1, 1], k)],
        }
    }

    /// Set grid `[cols, rows]` at every level, starting with the patch grid.
    pub fn level_grids(&self) -> Result<Vec<[usize; 2]>, PipelineError> {
        let mut grid = self.patch_grid;
        let mut out = Vec::with_capacity(self.levels.len());
        for (l, level) in self.levels.iter().enumerate() {
            let [a, b] = level.regroup;
            if a == 0 || b == 0 || grid[0] % a != 0 || grid[1] % b != 0 {
                return Err(PipelineError::Config(format!(
                    "level {l}: regroup {a}×{b} does not divide the {}×{} grid",
                    grid[0], grid[1]
                )));
            }
            grid = [grid[0] / a, grid[1] / b];
            out.push(grid);
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.levels.is_empty() {
            return Err(PipelineError::Config("at least one level is required".into()));
        }
        if self.levels[0].regroup != [1, 1] {
            return Err(PipelineError::Config("level 0 must use regroup [1, 1]".into()));
        }
        if self.patch_grid[0] == 0 || self.patch_grid[1] == 0 {
            return Err(PipelineError::Config("patch grid must be non-empty".into()));
        }
        if let Some([w, h]) = self.target_size {
            if w < self.patch_grid[0] || h < self.patch_grid[1] {
                return Err(PipelineError::Config(format!(
                    "target size {w}×{h} is smaller than the {}×{} patch grid",
                    self.patch_grid[0], self.patch_grid[1]
                )));
            }
        }
        if !(self.location_weight >= 0.0 && self.location_weight.is_finite()) {
            return Err(PipelineError::Config("location_weight must be non-negative".into()));
        }
        for (l, level) in self.levels.iter().enumerate() {
            if level.k == 0 {
                return Err(PipelineError::Config(format!("level {l}: k must be positive")));
            }
        }
        self.level_grids().map(|_| ())
    }

    /// Keypoints produced when every set has at least `k` candidates.
    pub fn expected_keypoints(&self) -> Result<usize, PipelineError> {
        let grids = self.level_grids()?;
        let top = grids.last().expect("validated non-empty");
        Ok(top[0] * top[1] * self.levels.last().expect("validated non-empty").k)
    }
}
