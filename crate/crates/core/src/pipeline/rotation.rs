use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use super::descriptor::compute_descriptor;
use super::hierarchy::{hierarchical_extract, Keypoint};
use super::{KernelChoice, PipelineConfig, PipelineError};
use crate::clustering::ClusteringMethod;
use crate::kernels::{build_kernel_matrix, KernelMatrix, NormalizedInnerProduct};
use crate::matching::{match_with_kernel, MatchOutcome, MatchingSpec};
use crate::solvers::SolverConfig;

/// Rotates `img` by `degrees` counter-clockwise (as displayed) about its
/// centre with bilinear interpolation. Output keeps the input size; samples
/// falling outside the source are black. Angles are taken modulo 360 and a
/// zero angle returns an exact copy.
pub fn rotate_image(img: &RgbImage, degrees: f64) -> RgbImage {
    let angle = degrees.rem_euclid(360.0);
    if angle == 0.0 {
        return img.clone();
    }
    let (w, h) = (img.width(), img.height());
    let (sin, cos) = angle.to_radians().sin_cos();
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let (max_x, max_y) = (w as f64 - 1.0, h as f64 - 1.0);
    RgbImage::from_fn(w, h, |x, y| {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        let sx = cx + cos * dx - sin * dy;
        let sy = cy + sin * dx + cos * dy;
        const SLACK: f64 = 1e-9;
        if sx < -SLACK || sy < -SLACK || sx > max_x + SLACK || sy > max_y + SLACK {
            return Rgb([0; 3]);
        }
        let (sx, sy) = (sx.clamp(0.0, max_x), sy.clamp(0.0, max_y));
        let (x0, y0) = (sx.floor() as u32, sy.floor() as u32);
        let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
        let (fx, fy) = (sx - x0 as f64, sy - y0 as f64);
        let p = |x, y| img.get_pixel(x, y).0.map(f64::from);
        let (a, b, c, d) = (p(x0, y0), p(x1, y0), p(x0, y1), p(x1, y1));
        Rgb(std::array::from_fn(|k| {
            let top = a[k] * (1.0 - fx) + b[k] * fx;
            let bottom = c[k] * (1.0 - fx) + d[k] * fx;
            (top * (1.0 - fy) + bottom * fy).round().clamp(0.0, 255.0) as u8
        }))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchExperimentConfig {
    /// Keypoints extracted from each image.
    pub keypoints: usize,
    pub method: ClusteringMethod,
    pub kernel: KernelChoice,
    pub location_weight: f64,
    pub descriptor_window: usize,
    /// `alpha` is replaced by each value of the sweep.
    pub matching: MatchingSpec,
}

impl Default for MatchExperimentConfig {
    fn default() -> Self {
        Self {
            keypoints: 10,
            method: ClusteringMethod::Kdc,
            kernel: KernelChoice::default(),
            location_weight: 0.25,
            descriptor_window: 9,
            matching: MatchingSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaRun {
    pub alpha: f64,
    pub outcome: MatchOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchExperiment {
    pub rotated: RgbImage,
    pub keypoints_a: Vec<Keypoint>,
    pub keypoints_b: Vec<Keypoint>,
    /// Descriptor similarities, rows for `keypoints_a`.
    pub kernel: KernelMatrix,
    pub runs: Vec<AlphaRun>,
}

/// Extracts keypoints from `img` and from `img` rotated by `degrees` with
/// the same seed, describes them and matches them once per `alpha`.
pub fn rotated_matching_experiment(
    img: &RgbImage,
    degrees: f64,
    config: &MatchExperimentConfig,
    alphas: &[f64],
    solver: &SolverConfig,
) -> Result<MatchExperiment, PipelineError> {
    matching_experiment(img, rotate_image(img, degrees), config, alphas, solver)
}

/// [`rotated_matching_experiment`] against an arbitrary second image,
/// which is returned in the `rotated` field.
pub fn matching_experiment(
    a: &RgbImage,
    b: RgbImage,
    config: &MatchExperimentConfig,
    alphas: &[f64],
    solver: &SolverConfig,
) -> Result<MatchExperiment, PipelineError> {
    let (keypoints_a, keypoints_b, kernel) = describe_and_compare(a, &b, config, solver)?;
    let runs = alphas
        .iter()
        .map(|&alpha| {
            let spec = MatchingSpec { alpha, ..config.matching };
            Ok(AlphaRun { alpha, outcome: match_with_kernel(&kernel, &spec, solver)? })
        })
        .collect::<Result<_, PipelineError>>()?;
    Ok(MatchExperiment { rotated: b, keypoints_a, keypoints_b, kernel, runs })
}

/// Keypoints of both images and their descriptor kernel matrix.
pub fn describe_and_compare(
    a: &RgbImage,
    b: &RgbImage,
    config: &MatchExperimentConfig,
    solver: &SolverConfig,
) -> Result<(Vec<Keypoint>, Vec<Keypoint>, KernelMatrix), PipelineError> {
    if config.descriptor_window % 2 == 0 {
        return Err(PipelineError::Config(format!(
            "descriptor_window must be odd, got {}",
            config.descriptor_window
        )));
    }
    let mut pipeline = PipelineConfig::single_level(config.keypoints);
    pipeline.location_weight = config.location_weight;
    pipeline.levels[0].method = config.method;
    pipeline.levels[0].kernel = config.kernel;
    let extract = |img: &RgbImage| -> Result<(Vec<Keypoint>, Vec<Vec<f64>>), PipelineError> {
        let kps = hierarchical_extract(img, &pipeline, solver)?.keypoints;
        let desc = kps
            .iter()
            .map(|k| compute_descriptor(img, k.col, k.row, config.descriptor_window))
            .collect();
        Ok((kps, desc))
    };
    let (kps_a, desc_a) = extract(a)?;
    let (kps_b, desc_b) = extract(b)?;
    let kernel = build_kernel_matrix(&desc_a, &desc_b, &NormalizedInnerProduct)?;
    Ok((kps_a, kps_b, kernel))
}
