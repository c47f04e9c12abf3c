//! Deterministic synthetic images for tests, benchmarks and demos.

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn constant_image(width: u32, height: u32, rgb: [u8; 3]) -> RgbImage {
    RgbImage::from_pixel(width, height, Rgb(rgb))
}

/// Black for columns `< edge`, white from `edge` on.
pub fn vertical_step(width: u32, height: u32, edge: u32) -> RgbImage {
    RgbImage::from_fn(width, height, |x, _| if x < edge { Rgb([0; 3]) } else { Rgb([255; 3]) })
}

/// A smooth colour gradient overlaid with seeded rectangles and discs.
pub fn synthetic_scene(width: u32, height: u32, seed: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base: [f64; 3] = [rng.gen_range(20.0..90.0), rng.gen_range(40.0..120.0), rng.gen_range(20.0..90.0)];
    let (wf, hf) = (width.max(1) as f64, height.max(1) as f64);
    let mut img = RgbImage::from_fn(width, height, |x, y| {
        let (u, v) = (x as f64 / wf, y as f64 / hf);
        Rgb([base[0] + 60.0 * u, base[1] + 40.0 * v, base[2] + 50.0 * (1.0 - u) * v].map(|c| c as u8))
    });
    let shapes = 3 + (width as usize * height as usize) / 1500;
    for _ in 0..shapes {
        let color = Rgb([rng.gen::<u8>(), rng.gen::<u8>(), rng.gen::<u8>()]);
        let cx = rng.gen_range(0.0..wf);
        let cy = rng.gen_range(0.0..hf);
        let rx = rng.gen_range(1.0..(wf / 6.0).max(2.0));
        let ry = rng.gen_range(1.0..(hf / 6.0).max(2.0));
        let disc = rng.gen_bool(0.5);
        let (x0, x1) = ((cx - rx).max(0.0) as u32, ((cx + rx).ceil() as u32).min(width));
        let (y0, y1) = ((cy - ry).max(0.0) as u32, ((cy + ry).ceil() as u32).min(height));
        for y in y0..y1 {
            for x in x0..x1 {
                let (dx, dy) = ((x as f64 + 0.5 - cx) / rx, (y as f64 + 0.5 - cy) / ry);
                if !disc || dx * dx + dy * dy <= 1.0 {
                    img.put_pixel(x, y, color);
                }
            }
        }
    }
    img
}
