use std::path::PathBuf;

/// Errors raised anywhere in the detection pipeline.
#[derive(thiserror::Error, Debug)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt stream: {0}")]
    CorruptStream(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("channel index {0} out of range (expected 1, 2 or 3)")]
    BadChannelIndex(usize),
    #[error("invalid image dimensions {width}x{height}")]
    BadDimensions { width: usize, height: usize },

    #[error("offset ({da}, {db}) does not fit inside a {height}x{width} image")]
    OffsetTooLarge { da: i32, db: i32, height: usize, width: usize },
    #[error("co-occurrence matrix has no counts")]
    EmptyMatrix,
    #[error("bad magic bytes in feature file")]
    BadMagic,
    #[error("unsupported feature file version {0}")]
    BadVersion(u8),
    #[error("expected {expected} planes, found {found}")]
    ChannelCountMismatch { expected: usize, found: usize },

    #[error("resampling produced a degenerate {0}x{1} image")]
    DegenerateOutput(usize, usize),
    #[error("crop {crop_w}x{crop_h} larger than image {width}x{height}")]
    CropLargerThanImage { crop_w: usize, crop_h: usize, width: usize, height: usize },
    #[error("filter window must be 3 or 5, got {0}")]
    BadWindow(usize),
    #[error("invalid attack parameter: {0}")]
    BadAttack(String),

    #[error("unsupported jpeg mode: {0}")]
    UnsupportedMode(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite value encountered {0}")]
    NonFiniteFault(String),
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),

    #[error("dataset root is missing the {0}/ class directory")]
    MissingClassDir(String),
    #[error("class directory {0}/ contains no images")]
    EmptyClass(String),
    #[error("infeasible split: {0}")]
    InfeasibleSplit(String),
    #[error("model expects {model} input planes, corpus has {corpus}")]
    PlaneCountMismatch { model: usize, corpus: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
