//! Neighbourhood filters and per-sample intensity maps.

use super::geometry::{reflect, to_u8};
use crate::error::{Error, Result};
use crate::raster::RgbImage;
use crate::rng::{generator, Normal};

fn check_window(window: usize) -> Result<()> {
    match window {
        3 | 5 => Ok(()),
        w => Err(Error::BadWindow(w)),
    }
}

/// Runs `f` over the reflect-101 `k x k` neighbourhood of every sample, per channel.
fn neighbourhood(img: &RgbImage, k: usize, mut f: impl FnMut(&[u8]) -> u8) -> RgbImage {
    let (w, h) = (img.width(), img.height());
    let half = (k / 2) as isize;
    let src = img.data();
    let mut data = vec![0u8; src.len()];
    let mut buf = vec![0u8; k * k];
    let cols: Vec<Vec<usize>> =
        (0..w).map(|c| (-half..=half).map(|d| reflect(c as isize + d, w)).collect()).collect();
    for r in 0..h {
        let rows: Vec<usize> = (-half..=half).map(|d| reflect(r as isize + d, h)).collect();
        for (c, cs) in cols.iter().enumerate() {
            for ch in 0..3 {
                let mut n = 0;
                for &rr in &rows {
                    for &cc in cs {
                        buf[n] = src[3 * (rr * w + cc) + ch];
                        n += 1;
                    }
                }
                data[3 * (r * w + c) + ch] = f(&buf);
            }
        }
    }
    RgbImage::new(w, h, data).expect("same dimensions as input")
}

/// Per-channel median over a 3x3 or 5x5 window.
pub fn median_filter(img: &RgbImage, window: usize) -> Result<RgbImage> {
    check_window(window)?;
    let mid = window * window / 2;
    let mut sorted = vec![0u8; window * window];
    Ok(neighbourhood(img, window, |vals| {
        sorted.copy_from_slice(vals);
        *sorted.select_nth_unstable(mid).1
    }))
}

/// Per-channel box mean over a 3x3 or 5x5 window, rounded half away from zero.
pub fn average_blur(img: &RgbImage, window: usize) -> Result<RgbImage> {
    check_window(window)?;
    let n = (window * window) as u32;
    Ok(neighbourhood(img, window, |vals| {
        let sum: u32 = vals.iter().map(|&v| v as u32).sum();
        ((2 * sum + n) / (2 * n)) as u8
    }))
}

/// The 3x3 sharpening kernel: 9 at the center, -1 elsewhere.
pub const SHARPEN: [[i32; 3]; 3] = [[-1, -1, -1], [-1, 9, -1], [-1, -1, -1]];

/// 3x3 sharpening convolution, clamped to [0, 255].
pub fn sharpen(img: &RgbImage) -> RgbImage {
    neighbourhood(img, 3, |vals| {
        let acc: i32 = vals.iter().zip(SHARPEN.iter().flatten()).map(|(&v, &k)| v as i32 * k).sum();
        acc.clamp(0, 255) as u8
    })
}

/// 3x3 average blur followed by [`sharpen`].
pub fn blur_then_sharpen(img: &RgbImage) -> RgbImage {
    sharpen(&average_blur(img, 3).expect("window 3 is valid"))
}

/// Adds i.i.d. `N(0, sigma^2)` noise to every sample. The stream is
/// `(seed, index)` so each image of a corpus gets its own draws.
pub fn gaussian_noise(img: &RgbImage, sigma: f64, seed: u64, index: u64) -> Result<RgbImage> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::BadAttack(format!("noise sigma {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let mut normal = Normal::new(generator(seed, index));
    let mut out = img.clone();
    for v in out.data_mut() {
        *v = to_u8(*v as f64 + sigma * normal.sample());
    }
    Ok(out)
}

/// `round(255 * (v / 255)^gamma)` per sample.
pub fn gamma_correct(img: &RgbImage, gamma: f64) -> Result<RgbImage> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::BadAttack(format!("gamma {gamma}")));
    }
    let lut: Vec<u8> = (0..256).map(|v| to_u8(255.0 * (v as f64 / 255.0).powf(gamma))).collect();
    let mut out = img.clone();
    for v in out.data_mut() {
        *v = lut[*v as usize];
    }
    Ok(out)
}
