//! Bicubic resampling, zoom, rotation and cropping.
//!
//! Resampling uses the Catmull-Rom cubic (a = -0.5) with pixel-center
//! alignment: destination sample `d` reads source coordinate
//! `(d + 0.5) * src / dst - 0.5`. Taps outside the image are reflected
//! without repeating the edge sample (reflect-101).

use crate::error::{Error, Result};
use crate::raster::RgbImage;

const A: f64 = -0.5;

/// Catmull-Rom kernel value at distance `d`.
pub(crate) fn cubic(d: f64) -> f64 {
    let d = d.abs();
    if d <= 1.0 {
        ((A + 2.0) * d - (A + 3.0)) * d * d + 1.0
    } else if d < 2.0 {
        ((A * d - 5.0 * A) * d + 8.0 * A) * d - 4.0 * A
    } else {
        0.0
    }
}

/// The four tap weights for fractional position `t` in [0, 1).
fn weights(t: f64) -> [f64; 4] {
    [cubic(1.0 + t), cubic(t), cubic(1.0 - t), cubic(2.0 - t)]
}

/// Reflect-101 index into `0..n`.
pub(crate) fn reflect(mut i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let last = n as isize - 1;
    loop {
        if i < 0 {
            i = -i;
        } else if i > last {
            i = 2 * last - i;
        } else {
            return i as usize;
        }
    }
}

/// Float sample to u8: clamp, then round half away from zero.
#[inline]
pub(crate) fn to_u8(v: f64) -> u8 {
    v.clamp(0.0, 255.0).round() as u8
}

/// Per-destination taps along one axis: first source index and weights.
fn axis_taps(src: usize, dst: usize) -> Vec<([usize; 4], [f64; 4])> {
    let ratio = src as f64 / dst as f64;
    (0..dst)
        .map(|d| {
            let s = (d as f64 + 0.5) * ratio - 0.5;
            let base = s.floor();
            let w = weights(s - base);
            let b = base as isize;
            let idx = [reflect(b - 1, src), reflect(b, src), reflect(b + 1, src), reflect(b + 2, src)];
            (idx, w)
        })
        .collect()
}

/// Bicubic resampling to exactly `width x height`.
pub fn resize_to(img: &RgbImage, width: usize, height: usize) -> Result<RgbImage> {
    if width == 0 || height == 0 {
        return Err(Error::DegenerateOutput(width, height));
    }
    let (sw, sh) = (img.width(), img.height());
    if (sw, sh) == (width, height) {
        return Ok(img.clone());
    }
    let src = img.data();
    let xs = axis_taps(sw, width);
    let ys = axis_taps(sh, height);
    // horizontal pass in f64, one rounding at the end
    let mut tmp = vec![0.0f64; 3 * width * sh];
    for r in 0..sh {
        let row = &src[3 * r * sw..3 * (r + 1) * sw];
        let out = &mut tmp[3 * r * width..3 * (r + 1) * width];
        for (c, (idx, w)) in xs.iter().enumerate() {
            for ch in 0..3 {
                out[3 * c + ch] = (0..4).map(|k| w[k] * row[3 * idx[k] + ch] as f64).sum();
            }
        }
    }
    let mut data = vec![0u8; 3 * width * height];
    for (r, (idx, w)) in ys.iter().enumerate() {
        let out = &mut data[3 * r * width..3 * (r + 1) * width];
        for (i, o) in out.iter_mut().enumerate() {
            let v: f64 = (0..4).map(|k| w[k] * tmp[3 * idx[k] * width + i]).sum();
            *o = to_u8(v);
        }
    }
    RgbImage::new(width, height, data)
}

fn scaled(dim: usize, factor: f64) -> usize {
    (dim as f64 * factor).round() as usize
}

/// Downscale by `factor` in (0, 1]; each dimension becomes `round(factor * dim)`.
pub fn resize(img: &RgbImage, factor: f64) -> Result<RgbImage> {
    if !(factor > 0.0 && factor <= 1.0) {
        return Err(Error::BadAttack(format!("resize factor {factor} outside (0, 1]")));
    }
    resize_to(img, scaled(img.width(), factor), scaled(img.height(), factor))
}

/// Upscale by `factor >= 1`, then crop the center back to the original size.
pub fn zoom(img: &RgbImage, factor: f64) -> Result<RgbImage> {
    if !(factor >= 1.0 && factor <= 8.0) {
        return Err(Error::BadAttack(format!("zoom factor {factor} outside [1, 8]")));
    }
    let big = resize_to(img, scaled(img.width(), factor), scaled(img.height(), factor))?;
    crop_center(&big, img.width(), img.height())
}

/// Central `width x height` window; offsets are `floor((dim - target) / 2)`.
pub fn crop_center(img: &RgbImage, width: usize, height: usize) -> Result<RgbImage> {
    let (w, h) = (img.width(), img.height());
    if width > w || height > h || width == 0 || height == 0 {
        return Err(Error::CropLargerThanImage { crop_w: width, crop_h: height, width: w, height: h });
    }
    let (top, left) = ((h - height) / 2, (w - width) / 2);
    let mut data = Vec::with_capacity(3 * width * height);
    for r in top..top + height {
        let start = 3 * (r * w + left);
        data.extend_from_slice(&img.data()[start..start + 3 * width]);
    }
    RgbImage::new(width, height, data)
}

/// Counter-clockwise rotation by `degrees` about the image center, same size.
pub fn rotate(img: &RgbImage, degrees: f64) -> RgbImage {
    let (w, h) = (img.width(), img.height());
    let theta = degrees.to_radians();
    let (sin, cos) = theta.sin_cos();
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let src = img.data();
    let mut data = vec![0u8; 3 * w * h];
    for r in 0..h {
        let dy = r as f64 - cy;
        for c in 0..w {
            let dx = c as f64 - cx;
            let sx = cx + cos * dx - sin * dy;
            let sy = cy + sin * dx + cos * dy;
            let (bx, by) = (sx.floor(), sy.floor());
            let (wx, wy) = (weights(sx - bx), weights(sy - by));
            let (bx, by) = (bx as isize, by as isize);
            let cols: [usize; 4] = std::array::from_fn(|k| reflect(bx - 1 + k as isize, w));
            let mut acc = [0.0f64; 3];
            for (j, &wyj) in wy.iter().enumerate() {
                let row = reflect(by - 1 + j as isize, h) * w;
                for (k, &col) in cols.iter().enumerate() {
                    let p = 3 * (row + col);
                    let wt = wyj * wx[k];
                    for ch in 0..3 {
                        acc[ch] += wt * src[p + ch] as f64;
                    }
                }
            }
            let o = 3 * (r * w + c);
            for ch in 0..3 {
                data[o + ch] = to_u8(acc[ch]);
            }
        }
    }
    RgbImage::new(w, h, data).expect("same dimensions as input")
}
