use image::{Rgb, RgbImage};

use super::hierarchy::Keypoint;
use crate::kernels::KernelMatrix;
use crate::matching::MatchSet;

const CROSS: Rgb<u8> = Rgb([255, 32, 32]);
const CROSS_ARM: i64 = 3;

/// Fixed five-stop ramp (dark blue, blue, teal, yellow, white) over `[0, 1]`.
const RAMP: [[f64; 3]; 5] = [
    [10.0, 10.0, 60.0],
    [30.0, 80.0, 200.0],
    [20.0, 180.0, 170.0],
    [250.0, 220.0, 40.0],
    [255.0, 255.0, 255.0],
];

/// Colour of `value` on the heatmap ramp; inputs are clamped to `[0, 1]`
/// and NaN maps to the lowest stop.
pub fn heat_color(value: f64) -> Rgb<u8> {
    let v = if value.is_nan() { 0.0 } else { value.clamp(0.0, 1.0) };
    let pos = v * (RAMP.len() - 1) as f64;
    let i = (pos.floor() as usize).min(RAMP.len() - 2);
    let t = pos - i as f64;
    Rgb(std::array::from_fn(|c| (RAMP[i][c] * (1.0 - t) + RAMP[i + 1][c] * t).round() as u8))
}

/// Kernel matrix as an image with `cell × cell` pixels per entry.
pub fn render_heatmap(matrix: &KernelMatrix, cell: u32) -> RgbImage {
    let cell = cell.max(1);
    RgbImage::from_fn(matrix.cols() as u32 * cell, matrix.rows() as u32 * cell, |x, y| {
        heat_color(matrix.get((y / cell) as usize, (x / cell) as usize))
    })
}

fn put(img: &mut RgbImage, x: i64, y: i64, color: Rgb<u8>) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, color);
    }
}

fn draw_cross(img: &mut RgbImage, x: i64, y: i64, color: Rgb<u8>) {
    for d in -CROSS_ARM..=CROSS_ARM {
        put(img, x + d, y, color);
        put(img, x, y + d, color);
    }
}

fn draw_line(img: &mut RgbImage, (x0, y0): (i64, i64), (x1, y1): (i64, i64), color: Rgb<u8>) {
    let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
    let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
    let (mut x, mut y, mut err) = (x0, y0, dx + dy);
    loop {
        put(img, x, y, color);
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// `img` with a cross on every keypoint.
pub fn render_overlay(img: &RgbImage, keypoints: &[Keypoint]) -> RgbImage {
    let mut out = img.clone();
    for kp in keypoints {
        draw_cross(&mut out, kp.col as i64, kp.row as i64, CROSS);
    }
    out
}

/// `a` and `b` side by side with keypoint crosses and a line per match,
/// coloured by its kernel value.
pub fn render_matches(a: &RgbImage, b: &RgbImage, kps_a: &[Keypoint], kps_b: &[Keypoint], matches: &MatchSet) -> RgbImage {
    const GAP: u32 = 4;
    let shift = (a.width() + GAP) as i64;
    let mut out = RgbImage::new(a.width() + GAP + b.width(), a.height().max(b.height()));
    image::imageops::replace(&mut out, &render_overlay(a, kps_a), 0, 0);
    image::imageops::replace(&mut out, &render_overlay(b, kps_b), shift, 0);
    for p in &matches.pairs {
        let (ka, kb) = (&kps_a[p.i], &kps_b[p.j]);
        draw_line(
            &mut out,
            (ka.col as i64, ka.row as i64),
            (kb.col as i64 + shift, kb.row as i64),
            heat_color(p.kernel),
        );
    }
    out
}
