//! 8-bit RGB rasters and their on-disk formats (PNG, binary PPM/PGM).
//!
//! Pixel coordinates are `(row, column)`, zero-based. Samples are stored
//! row-major with interleaved `R, G, B` triples.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// An 8-bit, 3-channel raster.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

/// A single 8-bit channel of an [`RgbImage`].
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

/// Color band of an RGB image.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub enum Band {
    Red,
    Green,
    Blue,
}

impl Band {
    pub const ALL: [Band; 3] = [Band::Red, Band::Green, Band::Blue];

    /// Zero-based position of the band inside an interleaved pixel.
    pub fn offset(self) -> usize {
        match self {
            Band::Red => 0,
            Band::Green => 1,
            Band::Blue => 2,
        }
    }

    /// Maps the one-based channel index used in documentation (1=Red, 2=Green, 3=Blue).
    pub fn from_index(index: usize) -> Result<Band> {
        match index {
            1 => Ok(Band::Red),
            2 => Ok(Band::Green),
            3 => Ok(Band::Blue),
            other => Err(Error::BadChannelIndex(other)),
        }
    }
}

/// On-disk encodings supported by [`save_image`].
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ImageFormat {
    Png,
    Ppm,
}

impl ImageFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ImageFormat::Png => "png",
            ImageFormat::Ppm => "ppm",
        }
    }

    pub fn from_path(path: &Path) -> Option<ImageFormat> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "png" => Some(ImageFormat::Png),
            "ppm" => Some(ImageFormat::Ppm),
            _ => None,
        }
    }
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != 3 * width * height {
            return Err(Error::BadDimensions { width, height });
        }
        Ok(RgbImage { width, height, data })
    }

    /// An image with every pixel set to `rgb`.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let data = rgb.iter().copied().cycle().take(3 * width * height).collect();
        RgbImage { width, height, data }
    }

    /// Builds an image by evaluating `f(row, col)` for every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(3 * width * height);
        for r in 0..height {
            for c in 0..width {
                data.extend_from_slice(&f(r, c));
            }
        }
        RgbImage { width, height, data }
    }

    /// Interleaves three equally sized planes.
    pub fn from_planes(red: &Plane, green: &Plane, blue: &Plane) -> Result<Self> {
        let (w, h) = (red.width, red.height);
        if [green, blue].iter().any(|p| p.width != w || p.height != h) {
            return Err(Error::BadDimensions { width: w, height: h });
        }
        let mut data = Vec::with_capacity(3 * w * h);
        for i in 0..w * h {
            data.extend_from_slice(&[red.data[i], green.data[i], blue.data[i]]);
        }
        RgbImage::new(w, h, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, row: usize, col: usize) -> [u8; 3] {
        let i = 3 * (row * self.width + col);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn sample(&self, row: usize, col: usize, band: Band) -> u8 {
        self.data[3 * (row * self.width + col) + band.offset()]
    }

    pub fn set_pixel(&mut self, row: usize, col: usize, rgb: [u8; 3]) {
        let i = 3 * (row * self.width + col);
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Extracts one band as a plane.
    pub fn plane(&self, band: Band) -> Plane {
        let data = self.data.iter().skip(band.offset()).step_by(3).copied().collect();
        Plane { width: self.width, height: self.height, data }
    }

    /// Swaps band contents according to `order`: output band `i` takes input band `order[i]`.
    pub fn permute_bands(&self, order: [Band; 3]) -> RgbImage {
        let mut out = self.clone();
        for (dst, src) in out.data.chunks_exact_mut(3).zip(self.data.chunks_exact(3)) {
            for (i, band) in order.iter().enumerate() {
                dst[i] = src[band.offset()];
            }
        }
        out
    }
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::BadDimensions { width, height });
        }
        Ok(Plane { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.data[row * self.width + col]
    }
}

/// Returns the channel with one-based `index` (1=Red, 2=Green, 3=Blue).
pub fn channel(img: &RgbImage, index: usize) -> Result<Plane> {
    Ok(img.plane(Band::from_index(index)?))
}

/// Decodes a PNG or binary PPM/PGM file, detected by its leading bytes.
pub fn load_image(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    let mut bytes = Vec::new();
    BufReader::new(file).read_to_end(&mut bytes)?;
    decode_image(&bytes)
}

/// Decodes an in-memory PNG or binary PPM/PGM stream.
pub fn decode_image(bytes: &[u8]) -> Result<RgbImage> {
    if bytes.starts_with(b"\x89PNG\r\n\x1a\n") {
        decode_png(bytes)
    } else if bytes.starts_with(b"P6") || bytes.starts_with(b"P5") {
        decode_pnm(bytes)
    } else {
        Err(Error::UnsupportedFormat("unrecognized signature".into()))
    }
}

fn decode_png(bytes: &[u8]) -> Result<RgbImage> {
    let mut decoder = png::Decoder::new(bytes);
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(png_error)?;
    if reader.info().bit_depth == png::BitDepth::Sixteen {
        return Err(Error::UnsupportedFormat("16-bit png".into()));
    }
    let mut buf = vec![0; reader.output_buffer_size()];
    let frame = reader.next_frame(&mut buf).map_err(png_error)?;
    if frame.bit_depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedFormat(format!("{:?} bit png", frame.bit_depth)));
    }
    let (width, height) = (frame.width as usize, frame.height as usize);
    let buf = &buf[..frame.buffer_size()];
    let channels = frame.color_type.samples();
    let mut data = Vec::with_capacity(3 * width * height);
    for px in buf.chunks_exact(channels) {
        match frame.color_type {
            png::ColorType::Grayscale | png::ColorType::GrayscaleAlpha => {
                data.extend_from_slice(&[px[0], px[0], px[0]])
            }
            png::ColorType::Rgb | png::ColorType::Rgba => data.extend_from_slice(&px[..3]),
            png::ColorType::Indexed => {
                return Err(Error::UnsupportedFormat("unexpanded palette".into()))
            }
        }
    }
    RgbImage::new(width, height, data)
}

fn png_error(e: png::DecodingError) -> Error {
    match e {
        png::DecodingError::IoError(io) => Error::CorruptStream(io.to_string()),
        other => Error::CorruptStream(other.to_string()),
    }
}

/// Parses the whitespace/comment separated header fields of a binary PNM file.
fn pnm_header(bytes: &[u8]) -> Result<([usize; 3], usize)> {
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(Error::CorruptStream("truncated pnm header".into())),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::CorruptStream("malformed pnm header".into()));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::CorruptStream("pnm header value out of range".into()))?;
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => Ok((fields, pos + 1)),
        _ => Err(Error::CorruptStream("truncated pnm header".into())),
    }
}

fn decode_pnm(bytes: &[u8]) -> Result<RgbImage> {
    let gray = bytes[1] == b'5';
    let ([width, height, maxval], start) = pnm_header(bytes)?;
    if maxval != 255 {
        return Err(Error::UnsupportedFormat(format!("pnm maxval {maxval}")));
    }
    if width == 0 || height == 0 {
        return Err(Error::BadDimensions { width, height });
    }
    let channels = if gray { 1 } else { 3 };
    let len = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::CorruptStream("pnm dimensions overflow".into()))?;
    let raster = bytes
        .get(start..start + len)
        .ok_or_else(|| Error::CorruptStream("truncated pnm raster".into()))?;
    let data = if gray { raster.iter().flat_map(|&v| [v, v, v]).collect() } else { raster.to_vec() };
    RgbImage::new(width, height, data)
}

/// Writes `img` in the requested format. The parent directory must exist.
pub fn save_image(img: &RgbImage, path: impl AsRef<Path>, format: ImageFormat) -> Result<()> {
    let bytes = encode_image(img, format)?;
    std::fs::write(path, bytes)?;
    Ok(())
}

pub fn encode_image(img: &RgbImage, format: ImageFormat) -> Result<Vec<u8>> {
    match format {
        ImageFormat::Ppm => {
            let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
            out.extend_from_slice(&img.data);
            Ok(out)
        }
        ImageFormat::Png => {
            let mut out = Vec::new();
            {
                let mut encoder = png::Encoder::new(&mut out, img.width as u32, img.height as u32);
                encoder.set_color(png::ColorType::Rgb);
                encoder.set_depth(png::BitDepth::Eight);
                let mut writer = encoder
                    .write_header()
                    .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
                writer
                    .write_image_data(&img.data)
                    .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
            }
            Ok(out)
        }
    }
}

/// Writes an 8-bit grayscale binary PGM (P5, maxval 255).
pub fn save_pgm(width: usize, height: usize, data: &[u8], path: impl AsRef<Path>) -> Result<()> {
    if data.len() != width * height {
        return Err(Error::BadDimensions { width, height });
    }
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{width} {height}\n255\n")?;
    w.write_all(data)?;
    w.flush()?;
    Ok(())
}
