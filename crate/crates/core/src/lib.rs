//! Detection of GAN-generated face images from spatial and cross-band pixel
//! co-occurrence statistics.
//!
//! The pipeline turns an RGB image into a stack of normalized 256x256
//! co-occurrence planes ([`features`]), classifies the stack with a small
//! convolutional network ([`nn`], [`models`]) and measures how well the
//! detector survives common post-processing ([`attacks`], [`jpeg`],
//! [`harness`]).

pub mod attacks;
pub mod error;
pub mod features;
pub mod harness;
pub mod jpeg;
pub mod models;
pub mod nn;
pub mod raster;
pub mod rng;

pub use error::{Error, Result};
pub use features::{FeatureTensor, NetKind, Offset};
pub use raster::RgbImage;
