use std::f64::consts::PI;

use image::RgbImage;

/// 2×2 spatial cells × 8 orientation bins.
pub const DESCRIPTOR_LEN: usize = 32;

const BINS: usize = 8;
const EPSILON: f64 = 1e-9;

fn luminance(img: &RgbImage, col: i64, row: i64) -> f64 {
    let c = col.clamp(0, img.width() as i64 - 1) as u32;
    let r = row.clamp(0, img.height() as i64 - 1) as u32;
    let [red, green, blue] = img.get_pixel(c, r).0;
    (0.299 * red as f64 + 0.587 * green as f64 + 0.114 * blue as f64) / 255.0
}

/// Gradient-orientation histogram over a `window × window` neighbourhood of
/// `(col, row)`, split into 2×2 cells with 8 orientation bins each.
///
/// Gradients are central differences of luminance with edge clamping, and
/// each sample votes its magnitude into one bin. Every bin gets `1e-9`
/// added before L2 normalization, so a flat region yields the uniform
/// histogram. Bin `b` of cell `(cx, cy)` is entry `(cy·2 + cx)·8 + b`, and
/// covers orientations `[b·π/4, (b+1)·π/4)` measured from +x towards +row.
///
/// # Panics
///
/// If `window` is even or the image is empty.
pub fn compute_descriptor(img: &RgbImage, col: usize, row: usize, window: usize) -> Vec<f64> {
    assert!(window % 2 == 1, "descriptor window must be odd, got {window}");
    assert!(img.width() > 0 && img.height() > 0, "empty image");
    let half = (window / 2) as i64;
    let (c0, r0) = (col as i64, row as i64);
    let mut hist = vec![0.0; DESCRIPTOR_LEN];
    for dy in -half..=half {
        for dx in -half..=half {
            let (c, r) = (c0 + dx, r0 + dy);
            let gx = luminance(img, c + 1, r) - luminance(img, c - 1, r);
            let gy = luminance(img, c, r + 1) - luminance(img, c, r - 1);
            let magnitude = gx.hypot(gy);
            if magnitude == 0.0 {
                continue;
            }
            let theta = gy.atan2(gx).rem_euclid(2.0 * PI);
            let bin = ((theta / (2.0 * PI / BINS as f64)) as usize).min(BINS - 1);
            let cx = ((dx + half) as usize * 2) / window;
            let cy = ((dy + half) as usize * 2) / window;
            hist[(cy * 2 + cx) * BINS + bin] += magnitude;
        }
    }
    for h in &mut hist {
        *h += EPSILON;
    }
    let norm = hist.iter().map(|h| h * h).sum::<f64>().sqrt();
    hist.iter_mut().for_each(|h| *h /= norm);
    hist
}
