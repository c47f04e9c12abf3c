use std::path::Path;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use super::{PipelineConfig, PipelineError};

/// Unit-norm `(x, y, r, g, b)` pixel feature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelVector(pub [f64; 5]);

impl PixelVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Feature of the pixel at `(col, row)` inside a `width × height` box.
///
/// Positions are scaled to `[0, 1]` by the box extent and multiplied by
/// `location_weight`; colors are scaled to `[0, 1]`. An all-zero vector
/// gets `1e-9` added to blue so normalization is defined.
pub fn pixel_vector(col: usize, row: usize, width: usize, height: usize, rgb: [u8; 3], location_weight: f64) -> PixelVector {
    let scale = |p: usize, extent: usize| if extent > 1 { p as f64 / (extent - 1) as f64 } else { 0.0 };
    let mut v = [
        scale(col, width) * location_weight,
        scale(row, height) * location_weight,
        rgb[0] as f64 / 255.0,
        rgb[1] as f64 / 255.0,
        rgb[2] as f64 / 255.0,
    ];
    if v.iter().all(|&c| c == 0.0) {
        v[4] = 1e-9;
    }
    let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    for c in &mut v {
        *c /= norm;
    }
    PixelVector(v)
}

pub fn load_image(path: &Path) -> Result<RgbImage, PipelineError> {
    let bytes = std::fs::read(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let img = image::load_from_memory(&bytes).map_err(|e| PipelineError::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(img.to_rgb8())
}

/// Box-filter resampling: every output pixel is the area-weighted mean of
/// the input pixels it covers.
pub fn downsample_area(img: &RgbImage, width: usize, height: usize) -> RgbImage {
    let (sw, sh) = (img.width() as usize, img.height() as usize);
    if (sw, sh) == (width, height) {
        return img.clone();
    }
    let wx = area_weights(sw, width);
    let wy = area_weights(sh, height);
    // horizontal pass into f64 rows
    let mut tmp = vec![[0.0f64; 3]; width * sh];
    for y in 0..sh {
        for (x, taps) in wx.iter().enumerate() {
            let acc = &mut tmp[y * width + x];
            for &(sx, w) in taps {
                let p = img.get_pixel(sx as u32, y as u32).0;
                for c in 0..3 {
                    acc[c] += w * p[c] as f64;
                }
            }
        }
    }
    let mut out = RgbImage::new(width as u32, height as u32);
    for (y, taps) in wy.iter().enumerate() {
        for x in 0..width {
            let mut acc = [0.0f64; 3];
            for &(sy, w) in taps {
                let p = tmp[sy * width + x];
                for c in 0..3 {
                    acc[c] += w * p[c];
                }
            }
            out.put_pixel(x as u32, y as u32, image::Rgb(acc.map(|v| v.round().clamp(0.0, 255.0) as u8)));
        }
    }
    out
}

/// For each of `dst` output cells, the source indices it overlaps and the
/// overlap fractions (summing to 1).
fn area_weights(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let ratio = src as f64 / dst as f64;
    (0..dst)
        .map(|o| {
            let (lo, hi) = (o as f64 * ratio, (o + 1) as f64 * ratio);
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(src);
            (first..last)
                .filter_map(|s| {
                    let overlap = hi.min((s + 1) as f64) - lo.max(s as f64);
                    (overlap > 0.0).then_some((s, overlap / ratio))
                })
                .collect()
        })
        .collect()
}

/// A level-0 patch. Pixels are row-major within the patch.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    /// Row-major index in the patch grid.
    pub index: usize,
    pub origin: (usize, usize),
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<PixelVector>,
}

impl Patch {
    /// Image coordinates `(col, row)` of the `i`-th pixel.
    pub fn coords(&self, i: usize) -> (usize, usize) {
        (self.origin.0 + i % self.width, self.origin.1 + i / self.width)
    }
}

/// Splits `img` into a `cols × rows` grid of equal patches, row-major.
/// Remainder pixels on the right and bottom are dropped.
pub fn split_patches(img: &RgbImage, grid: [usize; 2], location_weight: f64) -> Vec<Patch> {
    let (pw, ph) = (img.width() as usize / grid[0], img.height() as usize / grid[1]);
    let mut patches = Vec::with_capacity(grid[0] * grid[1]);
    for gr in 0..grid[1] {
        for gc in 0..grid[0] {
            let origin = (gc * pw, gr * ph);
            let mut pixels = Vec::with_capacity(pw * ph);
            for r in 0..ph {
                for c in 0..pw {
                    let rgb = img.get_pixel((origin.0 + c) as u32, (origin.1 + r) as u32).0;
                    pixels.push(pixel_vector(c, r, pw, ph, rgb, location_weight));
                }
            }
            patches.push(Patch {
                index: gr * grid[0] + gc,
                origin,
                width: pw,
                height: ph,
                pixels,
            });
        }
    }
    patches
}

#[derive(Debug, Clone)]
pub struct Preprocessed {
    /// Image after resampling to the configured size.
    pub image: RgbImage,
    pub patches: Vec<Patch>,
}

/// Loads `path`, resamples it to the configured size and featurizes every
/// pixel relative to its level-0 patch.
pub fn load_and_preprocess(path: &Path, config: &PipelineConfig) -> Result<Preprocessed, PipelineError> {
    config.validate()?;
    let raw = load_image(path)?;
    let image = match config.target_size {
        Some([w, h]) => downsample_area(&raw, w, h),
        None => raw,
    };
    let patches = split_patches(&image, config.patch_grid, config.location_weight);
    Ok(Preprocessed { image, patches })
}
