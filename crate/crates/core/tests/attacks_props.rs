mod common;

use common::oracle::random_image;
use crossco::attacks::{
    apply, apply_indexed, average_blur, gaussian_noise, median_filter, resize, rotate, sharpen, robustness_rows, zoom,
    AttackSpec, SHARPEN,
};
use crossco::raster::RgbImage;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Reflect-101 index, written independently of the library.
fn mirror(i: i64, n: usize) -> usize {
    let n = n as i64;
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - m }) as usize
}

fn neighbourhood(img: &RgbImage, r: usize, c: usize, ch: usize, k: usize) -> Vec<u8> {
    let half = (k / 2) as i64;
    let mut v = Vec::with_capacity(k * k);
    for dr in -half..=half {
        for dc in -half..=half {
            let rr = mirror(r as i64 + dr, img.height());
            let cc = mirror(c as i64 + dc, img.width());
            v.push(img.pixel(rr, cc)[ch]);
        }
    }
    v
}

fn per_sample(img: &RgbImage, f: impl Fn(usize, usize, usize) -> u8) -> RgbImage {
    RgbImage::from_fn(img.width(), img.height(), |r, c| [0, 1, 2].map(|ch| f(r, c, ch)))
}

fn small_image() -> impl Strategy<Value = RgbImage> {
    (1usize..=12, 1usize..=12, any::<u64>()).prop_map(|(w, h, s)| random_image(&mut ChaCha8Rng::seed_from_u64(s), w, h))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn median_matches_sort(img in small_image(), k in prop::sample::select(vec![3usize, 5])) {
        let expect = per_sample(&img, |r, c, ch| {
            let mut v = neighbourhood(&img, r, c, ch, k);
            v.sort_unstable();
            v[v.len() / 2]
        });
        prop_assert_eq!(median_filter(&img, k).unwrap(), expect);
    }

    #[test]
    fn blur_matches_rounded_mean(img in small_image(), k in prop::sample::select(vec![3usize, 5])) {
        let expect = per_sample(&img, |r, c, ch| {
            let v = neighbourhood(&img, r, c, ch, k);
            (v.iter().map(|&x| x as f64).sum::<f64>() / v.len() as f64).round() as u8
        });
        prop_assert_eq!(average_blur(&img, k).unwrap(), expect);
    }

    #[test]
    fn sharpen_matches_convolution(img in small_image()) {
        let expect = per_sample(&img, |r, c, ch| {
            let v = neighbourhood(&img, r, c, ch, 3);
            let k: Vec<i32> = SHARPEN.iter().flatten().copied().collect();
            v.iter().zip(&k).map(|(&x, &w)| x as i32 * w).sum::<i32>().clamp(0, 255) as u8
        });
        prop_assert_eq!(sharpen(&img), expect);
    }

    #[test]
    fn shapes(w in 2usize..=40, h in 2usize..=40, seed in any::<u64>()) {
        let img = random_image(&mut ChaCha8Rng::seed_from_u64(seed), w, h);
        for spec in robustness_rows() {
            let out = match spec {
                AttackSpec::CropCenter { width, height } if width > w || height > h => continue,
                _ => apply(&spec, &img),
            };
            let (ew, eh) = match spec {
                AttackSpec::Resize { factor } => ((factor * w as f64).round() as usize, (factor * h as f64).round() as usize),
                AttackSpec::CropCenter { width, height } => (width, height),
                _ => (w, h),
            };
            match out {
                Ok(o) => prop_assert_eq!((o.width(), o.height()), (ew, eh), "{}", spec),
                // resize may legitimately round a side to zero
                Err(e) => prop_assert!(ew == 0 || eh == 0, "{}: {}", spec, e),
            }
        }
    }

    #[test]
    fn deterministic(seed in any::<u64>(), index in 0u64..100) {
        let img = random_image(&mut ChaCha8Rng::seed_from_u64(seed), 20, 17);
        for spec in robustness_rows().into_iter().chain([AttackSpec::JpegCompress { quality: 80 }]) {
            if matches!(spec, AttackSpec::CropCenter { .. }) {
                continue;
            }
            let a = apply_indexed(&spec, &img, index).unwrap();
            let b = apply_indexed(&spec, &img, index).unwrap();
            prop_assert_eq!(a.data(), b.data(), "{}", spec);
        }
    }
}

fn is_constant(img: &RgbImage) -> bool {
    img.data().chunks_exact(3).all(|p| p == &img.data()[..3])
}

#[test]
fn constant_images_stay_constant() {
    for value in [0u8, 37, 128, 200, 255] {
        let img = RgbImage::filled(33, 29, [value, value / 2, 255 - value]);
        for spec in robustness_rows() {
            if matches!(spec, AttackSpec::GaussianNoise { .. } | AttackSpec::Clahe { .. } | AttackSpec::CropCenter { .. }) {
                continue;
            }
            let out = apply(&spec, &img).unwrap();
            assert!(is_constant(&out), "{spec} on {value}");
            let same = matches!(
                spec,
                AttackSpec::MedianFilter { .. }
                    | AttackSpec::AverageBlur { .. }
                    | AttackSpec::BlurThenSharpen
                    | AttackSpec::Zoom { .. }
                    | AttackSpec::Rotate { .. }
            );
            if same {
                assert_eq!(&out.data()[..3], &img.data()[..3], "{spec} on {value}");
            }
        }
        let cropped = apply(&AttackSpec::CropCenter { width: 10, height: 7 }, &img).unwrap();
        assert!(is_constant(&cropped));
    }
}

#[test]
fn noise_statistics() {
    let img = RgbImage::filled(128, 128, [128; 3]);
    let out = gaussian_noise(&img, 2.0, 11, 0).unwrap();
    let d: Vec<f64> = out.data().iter().map(|&v| v as f64 - 128.0).collect();
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    let sd = (d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d.len() as f64).sqrt();
    assert!(mean.abs() < 0.05, "mean {mean}");
    // rounding to integers adds 1/12 to the variance
    assert!((1.8..=2.2).contains(&sd), "std {sd}");
    assert_ne!(gaussian_noise(&img, 2.0, 11, 1).unwrap(), out);
}

/// `v = 2 * col + 10` (or row), so bicubic interpolation is exact up to rounding.
fn ramp(w: usize, h: usize, along_rows: bool) -> RgbImage {
    RgbImage::from_fn(w, h, |r, c| {
        let v = (2 * if along_rows { r } else { c } + 10) as u8;
        [v, v, v]
    })
}

/// Source coordinate of output sample `x` for a `from -> to` resampling.
fn source_coord(x: usize, from: usize, to: usize) -> f64 {
    (x as f64 + 0.5) * from as f64 / to as f64 - 0.5
}

fn taps_inside(s: f64, n: usize) -> bool {
    s.floor() >= 1.0 && s.floor() + 2.0 <= (n - 1) as f64
}

#[test]
fn resize_reproduces_ramps() {
    for factor in [0.9, 0.8, 0.5] {
        let img = ramp(100, 20, false);
        let out = resize(&img, factor).unwrap();
        let mut checked = 0;
        for x in 0..out.width() {
            let s = source_coord(x, 100, out.width());
            if !taps_inside(s, 100) {
                continue;
            }
            let expect = 2.0 * s + 10.0;
            for r in 0..out.height() {
                let got = out.pixel(r, x)[0] as f64;
                assert!((got - expect).abs() <= 1.0, "factor {factor}, col {x}: {got} vs {expect}");
            }
            checked += 1;
        }
        assert!(checked > out.width() / 2);
        let vert = resize(&ramp(20, 100, true), factor).unwrap();
        for y in 0..vert.height() {
            let s = source_coord(y, 100, vert.height());
            if taps_inside(s, 100) {
                assert!((vert.pixel(y, 3)[1] as f64 - (2.0 * s + 10.0)).abs() <= 1.0);
            }
        }
    }
}

#[test]
fn zoom_reproduces_ramps() {
    for factor in [1.1, 1.2, 1.9] {
        let img = ramp(100, 30, false);
        let out = zoom(&img, factor).unwrap();
        assert_eq!((out.width(), out.height()), (100, 30));
        let up = (factor * 100.0f64).round() as usize;
        let left = (up - 100) / 2;
        for x in 0..100 {
            let s = source_coord(x + left, 100, up);
            if taps_inside(s, 100) {
                let expect = 2.0 * s + 10.0;
                let got = out.pixel(15, x)[2] as f64;
                assert!((got - expect).abs() <= 2.0, "zoom {factor}, col {x}: {got} vs {expect}");
            }
        }
    }
}

#[test]
fn rotation_reproduces_ramps() {
    let (w, h) = (61usize, 61usize);
    let img = ramp(w, h, false);
    for deg in [5.0f64, 10.0, 45.0] {
        let out = rotate(&img, deg);
        let (sin, cos) = deg.to_radians().sin_cos();
        let (cx, cy) = ((w - 1) as f64 / 2.0, (h - 1) as f64 / 2.0);
        let mut checked = 0;
        for r in 0..h {
            for c in 0..w {
                let (dx, dy) = (c as f64 - cx, r as f64 - cy);
                let sx = cx + cos * dx - sin * dy;
                let sy = cy + sin * dx + cos * dy;
                if !(taps_inside(sx, w) && taps_inside(sy, h)) {
                    continue;
                }
                let expect = 2.0 * sx + 10.0;
                let got = out.pixel(r, c)[0] as f64;
                assert!((got - expect).abs() <= 1.0, "{deg} deg at ({r}, {c}): {got} vs {expect}");
                checked += 1;
            }
        }
        assert!(checked > w * h / 3);
    }
}
