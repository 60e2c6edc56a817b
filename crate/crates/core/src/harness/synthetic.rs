//! Synthetic two-class benchmark for desk-scale runs.
//!
//! "Real" images are smooth multi-scale luminance fields shared by all three
//! bands plus a small independent perturbation per band. "GAN" images come
//! from the same generator, after which every band goes through its own
//! random monotone intensity warp, so the bands stop tracking each other
//! while each band on its own still looks like a smooth image.

use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::raster::{save_image, ImageFormat, RgbImage};
use crate::rng::generator;

/// Class label: 0 for authentic, 1 for GAN-generated.
pub type Label = u8;
pub const REAL: Label = 0;
pub const GAN: Label = 1;

/// Generator parameters.
#[derive(Clone, Debug)]
pub struct SyntheticConfig {
    pub width: usize,
    pub height: usize,
    /// Peak amplitude of the per-band perturbation of authentic images.
    pub band_jitter: f64,
    /// Peak displacement of the warp control points, in grey levels.
    pub warp_strength: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig { width: 128, height: 128, band_jitter: 4.0, warp_strength: 40.0 }
    }
}

/// Bilinearly interpolated random lattice with `cells` intervals per side.
fn value_noise(rng: &mut ChaCha8Rng, cells: usize, width: usize, height: usize) -> Vec<f64> {
    let n = cells + 1;
    let lattice: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut out = Vec::with_capacity(width * height);
    for r in 0..height {
        let fy = r as f64 / (height.max(2) - 1) as f64 * cells as f64;
        let y0 = (fy.floor() as usize).min(cells - 1);
        let ty = fy - y0 as f64;
        for c in 0..width {
            let fx = c as f64 / (width.max(2) - 1) as f64 * cells as f64;
            let x0 = (fx.floor() as usize).min(cells - 1);
            let tx = fx - x0 as f64;
            let at = |y: usize, x: usize| lattice[y * n + x];
            let top = at(y0, x0) * (1.0 - tx) + at(y0, x0 + 1) * tx;
            let bottom = at(y0 + 1, x0) * (1.0 - tx) + at(y0 + 1, x0 + 1) * tx;
            // smoothstep in y hides lattice rows
            let sy = ty * ty * (3.0 - 2.0 * ty);
            out.push(top * (1.0 - sy) + bottom * sy);
        }
    }
    out
}

/// Random smooth luminance field in [0, 255].
fn luminance(rng: &mut ChaCha8Rng, width: usize, height: usize) -> Vec<f64> {
    let mut field = vec![0.0; width * height];
    for (cells, weight) in [(2usize, 1.0), (4, 0.5), (8, 0.25), (16, 0.125)] {
        let layer = value_noise(rng, cells, width, height);
        for (f, l) in field.iter_mut().zip(layer) {
            *f += weight * l;
        }
    }
    let (gx, gy) = (rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
    for r in 0..height {
        for c in 0..width {
            field[r * width + c] += gx * c as f64 / width as f64 + gy * r as f64 / height as f64;
        }
    }
    let lo = field.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = field.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // random contrast and brightness so intra-band statistics vary within a class
    let span = rng.gen_range(90.0..230.0);
    let base = rng.gen_range(5.0..(250.0 - span));
    field.iter().map(|v| base + span * (v - lo) / (hi - lo).max(1e-9)).collect()
}

/// Monotone piecewise-linear map of [0, 255] onto itself with jittered knots.
fn random_warp(rng: &mut ChaCha8Rng, strength: f64) -> [f64; 256] {
    const KNOTS: usize = 6;
    let mut ys = [0.0; KNOTS + 1];
    for (i, y) in ys.iter_mut().enumerate() {
        let x = 255.0 * i as f64 / KNOTS as f64;
        *y = if i == 0 || i == KNOTS { x } else { x + rng.gen_range(-strength..strength) };
    }
    for i in 1..=KNOTS {
        ys[i] = ys[i].max(ys[i - 1] + 1.0).min(255.0);
    }
    let mut lut = [0.0; 256];
    for (v, out) in lut.iter_mut().enumerate() {
        let pos = v as f64 / 255.0 * KNOTS as f64;
        let k = (pos.floor() as usize).min(KNOTS - 1);
        let t = pos - k as f64;
        *out = ys[k] * (1.0 - t) + ys[k + 1] * t;
    }
    lut
}

fn to_sample(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Draws image `index` of class `label`; identical arguments give identical images.
pub fn synthesize(config: &SyntheticConfig, label: Label, seed: u64, index: u64) -> RgbImage {
    let mut rng = generator(seed, (index << 1) | label as u64);
    let (w, h) = (config.width, config.height);
    let lum = luminance(&mut rng, w, h);
    let jitter: Vec<Vec<f64>> = (0..3)
        .map(|_| value_noise(&mut rng, 8, w, h).into_iter().map(|v| v * config.band_jitter).collect())
        .collect();
    let warps: Option<Vec<[f64; 256]>> =
        (label == GAN).then(|| (0..3).map(|_| random_warp(&mut rng, config.warp_strength)).collect());
    let mut data = Vec::with_capacity(3 * w * h);
    for i in 0..w * h {
        for band in 0..3 {
            let v = (lum[i] + jitter[band][i]).clamp(0.0, 255.0);
            let v = match &warps {
                Some(luts) => {
                    let lo = v.floor() as usize;
                    let hi = (lo + 1).min(255);
                    let t = v - lo as f64;
                    luts[band][lo] * (1.0 - t) + luts[band][hi] * t
                }
                None => v,
            };
            data.push(to_sample(v));
        }
    }
    RgbImage::new(w, h, data).expect("dimensions are positive")
}

/// Writes `per_class` images of each class under `root/real` and `root/gan`.
pub fn write_dataset(root: &Path, config: &SyntheticConfig, per_class: usize, seed: u64, format: ImageFormat) -> Result<()> {
    for (label, dir) in [(REAL, "real"), (GAN, "gan")] {
        let d = root.join(dir);
        std::fs::create_dir_all(&d)?;
        for i in 0..per_class {
            let img = synthesize(config, label, seed, i as u64);
            save_image(&img, d.join(format!("{dir}_{i:05}.{}", format.extension())), format)?;
        }
    }
    Ok(())
}
