//! Brute-force reference implementations.

use crossco::raster::RgbImage;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Direct double loop over all in-bounds pairs. `first(a, b)` is the first
/// member at row `a`, column `b`; `second` is read at `(a + da, b + db)`.
pub fn cooc(
    height: usize,
    width: usize,
    da: i32,
    db: i32,
    first: impl Fn(usize, usize) -> u8,
    second: impl Fn(usize, usize) -> u8,
) -> Vec<u32> {
    let mut m = vec![0u32; 256 * 256];
    for a in 0..height as i64 {
        for b in 0..width as i64 {
            let (a2, b2) = (a + da as i64, b + db as i64);
            if a2 < 0 || b2 < 0 || a2 >= height as i64 || b2 >= width as i64 {
                continue;
            }
            let x = first(a as usize, b as usize) as usize;
            let y = second(a2 as usize, b2 as usize) as usize;
            m[x * 256 + y] += 1;
        }
    }
    m
}

/// Spatial or cross-band oracle on an RGB image; bands are 0, 1, 2.
pub fn image_cooc(img: &RgbImage, band1: usize, band2: usize, da: i32, db: i32) -> Vec<u32> {
    cooc(img.height(), img.width(), da, db, |r, c| img.pixel(r, c)[band1], |r, c| img.pixel(r, c)[band2])
}

pub fn random_image(rng: &mut ChaCha8Rng, width: usize, height: usize) -> RgbImage {
    RgbImage::from_fn(width, height, |_, _| [rng.gen(), rng.gen(), rng.gen()])
}

/// Random image whose values use only `levels` distinct grey levels per band,
/// so that co-occurrence cells collide often.
pub fn coarse_image(rng: &mut ChaCha8Rng, width: usize, height: usize, levels: u8) -> RgbImage {
    let step = 255 / levels.max(1);
    RgbImage::from_fn(width, height, |_, _| {
        [0; 3].map(|_: u8| rng.gen_range(0..levels) * step)
    })
}
