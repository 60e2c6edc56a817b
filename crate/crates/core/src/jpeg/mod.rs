//! Baseline JPEG: IJG quality scaling, a JFIF encoder and a sequential decoder.
//!
//! The encoder keeps full-resolution chroma unless [`Chroma::Half`] is asked
//! for. Transforms are exact floating-point DCT-II; coefficients are rounded
//! half away from zero.

mod dct;
mod decoder;
mod encoder;
mod tables;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use dct::{forward as dct_forward, inverse as dct_inverse};
pub use decoder::{decode, decode_components, Components};
pub use encoder::encode;
pub use tables::{quality_scale, QuantTables, CHROMA_BASE, LUMA_BASE, ZIGZAG};

use crate::error::{Error, Result};
use crate::raster::RgbImage;

/// Chroma sampling of encoded streams.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Chroma {
    /// 4:4:4
    #[default]
    Full,
    /// 4:2:0
    Half,
}

impl fmt::Display for Chroma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Chroma::Full => "444",
            Chroma::Half => "420",
        })
    }
}

impl FromStr for Chroma {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "444" => Ok(Chroma::Full),
            "420" => Ok(Chroma::Half),
            other => Err(Error::Config(format!("chroma mode {other:?} (expected 444 or 420)"))),
        }
    }
}

/// Encode then decode: the compression attack.
pub fn recompress(img: &RgbImage, qf: u8, chroma: Chroma) -> Result<RgbImage> {
    decode(&encode(img, qf, chroma)?)
}

/// Peak signal-to-noise ratio in dB between equally sized images.
pub fn psnr(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(Error::ShapeMismatch("psnr of differently sized images".into()));
    }
    let mse = a.data().iter().zip(b.data()).map(|(&x, &y)| (x as f64 - y as f64).powi(2)).sum::<f64>()
        / a.data().len() as f64;
    Ok(if mse == 0.0 { f64::INFINITY } else { 10.0 * (255.0 * 255.0 / mse).log10() })
}
