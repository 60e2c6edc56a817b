//! Post-processing operations used to probe detector robustness.
//!
//! Every operation is deterministic in its parameters; Gaussian noise also
//! takes a seed and an image index. Specs round-trip through the
//! `kind:param[:param...]` strings accepted on the command line.

mod clahe;
mod filters;
mod geometry;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use clahe::{clahe, luma, DEFAULT_TILES};
pub use filters::{average_blur, blur_then_sharpen, gamma_correct, gaussian_noise, median_filter, sharpen, SHARPEN};
pub use geometry::{crop_center, resize, resize_to, rotate, zoom};

use crate::error::{Error, Result};
use crate::jpeg::{self, Chroma};
use crate::raster::RgbImage;

/// One parameterized post-processing operation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum AttackSpec {
    Resize { factor: f64 },
    Zoom { factor: f64 },
    Rotate { degrees: f64 },
    CropCenter { width: usize, height: usize },
    MedianFilter { window: usize },
    AverageBlur { window: usize },
    GaussianNoise { sigma: f64, seed: u64 },
    GammaCorrect { gamma: f64 },
    Clahe { clip: f64, tiles: (usize, usize) },
    BlurThenSharpen,
    JpegCompress { quality: u8 },
}

impl AttackSpec {
    /// Checks parameter ranges.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::BadAttack(msg));
        match *self {
            AttackSpec::Resize { factor } if !(factor > 0.0 && factor <= 1.0) => bad(format!("resize factor {factor}")),
            AttackSpec::Zoom { factor } if !(factor >= 1.0 && factor <= 8.0) => bad(format!("zoom factor {factor}")),
            AttackSpec::Rotate { degrees } if !(degrees.abs() < 360.0) => bad(format!("rotation angle {degrees}")),
            AttackSpec::CropCenter { width, height } if width == 0 || height == 0 => bad("empty crop".into()),
            AttackSpec::MedianFilter { window } | AttackSpec::AverageBlur { window } if window != 3 && window != 5 => {
                Err(Error::BadWindow(window))
            }
            AttackSpec::GaussianNoise { sigma, .. } if !(sigma >= 0.0 && sigma.is_finite()) => {
                bad(format!("noise sigma {sigma}"))
            }
            AttackSpec::GammaCorrect { gamma } if !(gamma > 0.0 && gamma.is_finite()) => bad(format!("gamma {gamma}")),
            AttackSpec::Clahe { clip, tiles } if !(clip > 0.0 && clip.is_finite()) || tiles.0 == 0 || tiles.1 == 0 => {
                bad(format!("clahe clip {clip}, tiles {}x{}", tiles.0, tiles.1))
            }
            AttackSpec::JpegCompress { quality } if !(1..=100).contains(&quality) => bad(format!("quality {quality}")),
            _ => Ok(()),
        }
    }

    /// Row label of the operation in robustness tables.
    pub fn operation(&self) -> &'static str {
        match self {
            AttackSpec::Resize { .. } => "Resizing",
            AttackSpec::Zoom { .. } => "Zooming",
            AttackSpec::Rotate { .. } => "Rotation",
            AttackSpec::CropCenter { .. } => "Cropping",
            AttackSpec::MedianFilter { .. } => "Median filter",
            AttackSpec::AverageBlur { .. } => "Average blurring",
            AttackSpec::GaussianNoise { .. } => "Gaussian noise",
            AttackSpec::GammaCorrect { .. } => "Gamma correction",
            AttackSpec::Clahe { .. } => "AHE",
            AttackSpec::BlurThenSharpen => "Blurring followed by sharpening",
            AttackSpec::JpegCompress { .. } => "JPEG compression",
        }
    }

    /// Parameter column of robustness tables; `-` when the operation has none.
    pub fn parameter(&self) -> String {
        match *self {
            AttackSpec::Resize { factor: v } | AttackSpec::Zoom { factor: v } => format!("{v}"),
            AttackSpec::Rotate { degrees } => format!("{degrees}"),
            AttackSpec::CropCenter { width, height } => format!("{width} x {height}"),
            AttackSpec::MedianFilter { window } | AttackSpec::AverageBlur { window } => format!("{window} x {window}"),
            AttackSpec::GaussianNoise { sigma, .. } => format!("{sigma}"),
            AttackSpec::GammaCorrect { gamma } => format!("{gamma}"),
            AttackSpec::Clahe { .. } | AttackSpec::BlurThenSharpen => "-".into(),
            AttackSpec::JpegCompress { quality } => format!("{quality}"),
        }
    }
}

impl fmt::Display for AttackSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            AttackSpec::Resize { factor } => write!(f, "resize:{factor}"),
            AttackSpec::Zoom { factor } => write!(f, "zoom:{factor}"),
            AttackSpec::Rotate { degrees } => write!(f, "rotate:{degrees}"),
            AttackSpec::CropCenter { width, height } => write!(f, "crop:{width}x{height}"),
            AttackSpec::MedianFilter { window } => write!(f, "median:{window}"),
            AttackSpec::AverageBlur { window } => write!(f, "blur:{window}"),
            AttackSpec::GaussianNoise { sigma, seed } => write!(f, "noise:{sigma}:seed={seed}"),
            AttackSpec::GammaCorrect { gamma } => write!(f, "gamma:{gamma}"),
            AttackSpec::Clahe { clip, tiles } => write!(f, "clahe:{clip}:{}x{}", tiles.0, tiles.1),
            AttackSpec::BlurThenSharpen => write!(f, "blursharpen"),
            AttackSpec::JpegCompress { quality } => write!(f, "jpeg:{quality}"),
        }
    }
}

fn parse_num<T: FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::BadAttack(format!("cannot parse {what} from {s:?}")))
}

fn parse_dims(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| Error::BadAttack(format!("expected WxH, got {s:?}")))?;
    Ok((parse_num(a, "width")?, parse_num(b, "height")?))
}

impl FromStr for AttackSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let kind = parts[0].to_ascii_lowercase();
        let args = &parts[1..];
        let arity = |lo: usize, hi: usize| {
            if args.len() < lo || args.len() > hi {
                Err(Error::BadAttack(format!("{s:?}: wrong number of parameters")))
            } else {
                Ok(())
            }
        };
        let spec = match kind.as_str() {
            "resize" => {
                arity(1, 1)?;
                AttackSpec::Resize { factor: parse_num(args[0], "factor")? }
            }
            "zoom" => {
                arity(1, 1)?;
                AttackSpec::Zoom { factor: parse_num(args[0], "factor")? }
            }
            "rotate" => {
                arity(1, 1)?;
                AttackSpec::Rotate { degrees: parse_num(args[0], "angle")? }
            }
            "crop" => {
                arity(1, 1)?;
                let (width, height) = parse_dims(args[0])?;
                AttackSpec::CropCenter { width, height }
            }
            "median" => {
                arity(1, 1)?;
                AttackSpec::MedianFilter { window: parse_num(args[0], "window")? }
            }
            "blur" => {
                arity(1, 1)?;
                AttackSpec::AverageBlur { window: parse_num(args[0], "window")? }
            }
            "noise" => {
                arity(1, 2)?;
                let seed = match args.get(1) {
                    Some(a) => {
                        let v = a.strip_prefix("seed=").ok_or_else(|| Error::BadAttack(format!("{s:?}: expected seed=N")))?;
                        parse_num(v, "seed")?
                    }
                    None => 0,
                };
                AttackSpec::GaussianNoise { sigma: parse_num(args[0], "sigma")?, seed }
            }
            "gamma" => {
                arity(1, 1)?;
                AttackSpec::GammaCorrect { gamma: parse_num(args[0], "gamma")? }
            }
            "clahe" | "ahe" => {
                arity(0, 2)?;
                let clip = match args.first() {
                    Some(a) => parse_num(a, "clip")?,
                    None => 1.0,
                };
                let tiles = match args.get(1) {
                    Some(a) => parse_dims(a)?,
                    None => DEFAULT_TILES,
                };
                AttackSpec::Clahe { clip, tiles }
            }
            "blursharpen" => {
                arity(0, 0)?;
                AttackSpec::BlurThenSharpen
            }
            "jpeg" => {
                arity(1, 1)?;
                AttackSpec::JpegCompress { quality: parse_num(args[0], "quality")? }
            }
            _ => return Err(Error::BadAttack(format!("unknown attack {:?}", parts[0]))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl TryFrom<String> for AttackSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<AttackSpec> for String {
    fn from(spec: AttackSpec) -> String {
        spec.to_string()
    }
}

/// Parses a comma-separated attack list.
pub fn parse_list(s: &str) -> Result<Vec<AttackSpec>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(str::parse).collect()
}

/// Applies `spec` to image number `index` of a corpus; the index only
/// matters for noise, whose stream is `(seed, index)`.
pub fn apply_indexed(spec: &AttackSpec, img: &RgbImage, index: u64) -> Result<RgbImage> {
    spec.validate()?;
    match *spec {
        AttackSpec::Resize { factor } => resize(img, factor),
        AttackSpec::Zoom { factor } => zoom(img, factor),
        AttackSpec::Rotate { degrees } => Ok(rotate(img, degrees)),
        AttackSpec::CropCenter { width, height } => crop_center(img, width, height),
        AttackSpec::MedianFilter { window } => median_filter(img, window),
        AttackSpec::AverageBlur { window } => average_blur(img, window),
        AttackSpec::GaussianNoise { sigma, seed } => gaussian_noise(img, sigma, seed, index),
        AttackSpec::GammaCorrect { gamma } => gamma_correct(img, gamma),
        AttackSpec::Clahe { clip, tiles } => clahe(img, clip, tiles),
        AttackSpec::BlurThenSharpen => Ok(blur_then_sharpen(img)),
        AttackSpec::JpegCompress { quality } => jpeg::recompress(img, quality, Chroma::Full),
    }
}

pub fn apply(spec: &AttackSpec, img: &RgbImage) -> Result<RgbImage> {
    apply_indexed(spec, img, 0)
}

/// The 22 robustness rows in table order.
pub fn robustness_rows() -> Vec<AttackSpec> {
    use AttackSpec::*;
    let mut rows = vec![MedianFilter { window: 3 }, MedianFilter { window: 5 }];
    rows.extend([0.5, 0.8, 2.0].map(|sigma| GaussianNoise { sigma, seed: 0 }));
    rows.push(Clahe { clip: 1.0, tiles: DEFAULT_TILES });
    rows.extend([0.9, 0.8, 1.2].map(|gamma| GammaCorrect { gamma }));
    rows.extend([3, 5].map(|window| AverageBlur { window }));
    rows.extend([0.9, 0.8, 0.5].map(|factor| Resize { factor }));
    rows.extend([1.1, 1.2, 1.9].map(|factor| Zoom { factor }));
    rows.extend([5.0, 10.0, 45.0].map(|degrees| Rotate { degrees }));
    rows.push(CropCenter { width: 880, height: 880 });
    rows.push(BlurThenSharpen);
    rows
}

/// Operations applied before compression in the JPEG-aware robustness tables.
pub fn pre_compression_rows() -> Vec<AttackSpec> {
    vec![
        AttackSpec::MedianFilter { window: 5 },
        AttackSpec::Resize { factor: 0.8 },
        AttackSpec::GaussianNoise { sigma: 2.0, seed: 0 },
        AttackSpec::Zoom { factor: 1.9 },
        AttackSpec::Clahe { clip: 1.0, tiles: DEFAULT_TILES },
    ]
}
