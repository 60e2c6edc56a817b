//! Contrast-limited adaptive histogram equalization on BT.601 luma.
//!
//! Luma is quantized to 8 bits for the histogram lookups; the equalized
//! luma shift is added back to every band, which is exactly the RGB result
//! of replacing Y while keeping Cb and Cr in floating point.

use super::geometry::{reflect, to_u8};
use crate::error::{Error, Result};
use crate::raster::RgbImage;

/// Default tile grid (columns, rows).
pub const DEFAULT_TILES: (usize, usize) = (8, 8);

/// BT.601 luma of one pixel.
pub fn luma(p: [u8; 3]) -> f64 {
    0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64
}

/// Clipped-histogram equalization map of one tile, values in [0, 255].
fn tile_map(hist: &[u32; 256], pixels: usize, clip: f64) -> [f64; 256] {
    let limit = (clip * pixels as f64 / 256.0).max(1.0);
    let mut bins = [0.0f64; 256];
    let mut excess = 0.0;
    for (b, &h) in bins.iter_mut().zip(hist) {
        let h = h as f64;
        if h > limit {
            excess += h - limit;
            *b = limit;
        } else {
            *b = h;
        }
    }
    let share = excess / 256.0;
    let mut map = [0.0; 256];
    let mut cdf = 0.0;
    for (m, b) in map.iter_mut().zip(bins) {
        cdf += b + share;
        *m = 255.0 * cdf / pixels as f64;
    }
    map
}

/// Tile index below a position and the blend weight toward the next one.
fn blend_axis(pos: usize, tile: usize, tiles: usize) -> (usize, usize, f64) {
    let f = (pos as f64 + 0.5) / tile as f64 - 0.5;
    if f <= 0.0 {
        return (0, 0, 0.0);
    }
    let lo = f.floor() as usize;
    if lo + 1 >= tiles {
        return (tiles - 1, tiles - 1, 0.0);
    }
    (lo, lo + 1, f - lo as f64)
}

/// CLAHE with clip limit `clip` (multiples of the mean bin height) over a
/// `tiles = (columns, rows)` grid; the grid shrinks to fit tiny images.
pub fn clahe(img: &RgbImage, clip: f64, tiles: (usize, usize)) -> Result<RgbImage> {
    if !(clip > 0.0 && clip.is_finite()) || tiles.0 == 0 || tiles.1 == 0 {
        return Err(Error::BadAttack(format!("clahe clip {clip}, tiles {}x{}", tiles.0, tiles.1)));
    }
    let (w, h) = (img.width(), img.height());
    let (tx, ty) = (tiles.0.min(w), tiles.1.min(h));
    // equal tiles over a reflect-101 padded grid, so every map sees the same pixel count
    let (tw, th) = (w.div_ceil(tx), h.div_ceil(ty));
    let yq: Vec<u8> = img.data().chunks_exact(3).map(|p| to_u8(luma([p[0], p[1], p[2]]))).collect();
    let mut maps = Vec::with_capacity(tx * ty);
    for j in 0..ty {
        for i in 0..tx {
            let mut hist = [0u32; 256];
            for r in j * th..(j + 1) * th {
                let row = reflect(r as isize, h) * w;
                for c in i * tw..(i + 1) * tw {
                    hist[yq[row + reflect(c as isize, w)] as usize] += 1;
                }
            }
            maps.push(tile_map(&hist, tw * th, clip));
        }
    }
    let xb: Vec<_> = (0..w).map(|c| blend_axis(c, tw, tx)).collect();
    let mut out = img.clone();
    for r in 0..h {
        let (j0, j1, wy) = blend_axis(r, th, ty);
        for (c, &(i0, i1, wx)) in xb.iter().enumerate() {
            let v = yq[r * w + c] as usize;
            let at = |j: usize, i: usize| maps[j * tx + i][v];
            let top = at(j0, i0) + wx * (at(j0, i1) - at(j0, i0));
            let bottom = at(j1, i0) + wx * (at(j1, i1) - at(j1, i0));
            let shift = top + wy * (bottom - top) - v as f64;
            let o = 3 * (r * w + c);
            for s in &mut out.data_mut()[o..o + 3] {
                *s = to_u8(*s as f64 + shift);
            }
        }
    }
    Ok(out)
}
