//! Spatial and cross-band co-occurrence matrices and the CNN input tensors
//! built from them.
//!
//! A co-occurrence matrix counts, for a fixed displacement `(da, db)`, how
//! often a pixel with value `x` is paired with the pixel `da` rows and `db`
//! columns away having value `y`. Spatial matrices pair a band with itself;
//! cross-band matrices read the first pixel from one band and the displaced
//! pixel from another.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{save_pgm, Band, Plane, RgbImage};

/// Number of grey levels, and the side of every co-occurrence grid.
pub const LEVELS: usize = 256;
/// Cells in one co-occurrence grid.
pub const CELLS: usize = LEVELS * LEVELS;

/// Pixel displacement `(rows, columns)` between the two members of a pair.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct Offset {
    pub da: i32,
    pub db: i32,
}

impl Offset {
    pub const fn new(da: i32, db: i32) -> Self {
        Offset { da, db }
    }

    /// Number of in-bounds pairs this offset yields on a `height x width` grid.
    pub fn pair_count(self, height: usize, width: usize) -> Result<usize> {
        let (ada, adb) = (self.da.unsigned_abs() as usize, self.db.unsigned_abs() as usize);
        if ada >= height || adb >= width {
            return Err(Error::OffsetTooLarge { da: self.da, db: self.db, height, width });
        }
        Ok((height - ada) * (width - adb))
    }
}

impl Default for Offset {
    fn default() -> Self {
        Offset::new(1, 1)
    }
}

impl fmt::Display for Offset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.da, self.db)
    }
}

impl FromStr for Offset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse = |v: &str| v.trim().parse::<i32>().map_err(|_| Error::Config(format!("bad offset {s:?}")));
        let (a, b) = s.split_once(',').ok_or_else(|| Error::Config(format!("bad offset {s:?}, expected dr,dc")))?;
        Ok(Offset::new(parse(a)?, parse(b)?))
    }
}

/// Which band (or ordered band pair) a matrix was computed from.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Source {
    Red,
    Green,
    Blue,
    /// First pixel from red, displaced pixel from green.
    RG,
    /// First pixel from green, displaced pixel from blue.
    GB,
    /// First pixel from red, displaced pixel from blue.
    RB,
}

impl Source {
    pub fn bands(self) -> (Band, Band) {
        match self {
            Source::Red => (Band::Red, Band::Red),
            Source::Green => (Band::Green, Band::Green),
            Source::Blue => (Band::Blue, Band::Blue),
            Source::RG => (Band::Red, Band::Green),
            Source::GB => (Band::Green, Band::Blue),
            Source::RB => (Band::Red, Band::Blue),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Source::Red => "red",
            Source::Green => "green",
            Source::Blue => "blue",
            Source::RG => "rg",
            Source::GB => "gb",
            Source::RB => "rb",
        }
    }
}

impl FromStr for Source {
    type Err = Error;

    /// Accepts the names printed by [`Source::name`], case-insensitively.
    fn from_str(s: &str) -> Result<Self> {
        const ALL: [Source; 6] = [Source::Red, Source::Green, Source::Blue, Source::RG, Source::GB, Source::RB];
        ALL.into_iter()
            .find(|src| src.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown source {s:?} (red, green, blue, rg, gb, rb)")))
    }
}

/// Which detector a tensor is laid out for.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetKind {
    /// Three intra-band planes.
    Conet,
    /// Three intra-band planes followed by three cross-band planes.
    Crossconet,
}

impl NetKind {
    pub fn planes(self) -> usize {
        match self {
            NetKind::Conet => 3,
            NetKind::Crossconet => 6,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NetKind::Conet => "Co-Net",
            NetKind::Crossconet => "Cross-Co-Net",
        }
    }

    /// Plane order of the assembled tensor.
    pub fn sources(self) -> &'static [Source] {
        match self {
            NetKind::Conet => &[Source::Red, Source::Green, Source::Blue],
            NetKind::Crossconet => {
                &[Source::Red, Source::Green, Source::Blue, Source::RG, Source::RB, Source::GB]
            }
        }
    }
}

impl FromStr for NetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "conet" | "co-net" => Ok(NetKind::Conet),
            "crossconet" | "cross-co-net" => Ok(NetKind::Crossconet),
            _ => Err(Error::Config(format!("unknown network {s:?}"))),
        }
    }
}

/// A 256x256 grid of pair counts, indexed `[x][y]` (first value, displaced value).
#[derive(Clone, PartialEq, Eq)]
pub struct CoocMatrix {
    counts: Box<[u32]>,
    source: Source,
    offset: Offset,
}

impl fmt::Debug for CoocMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoocMatrix")
            .field("source", &self.source)
            .field("offset", &self.offset)
            .field("total", &self.total())
            .finish()
    }
}

impl CoocMatrix {
    /// Wraps a raw 65536-entry count grid.
    pub fn from_counts(counts: Vec<u32>, source: Source, offset: Offset) -> Result<Self> {
        if counts.len() != CELLS {
            return Err(Error::ShapeMismatch(format!("expected {CELLS} counts, got {}", counts.len())));
        }
        Ok(CoocMatrix { counts: counts.into_boxed_slice(), source, offset })
    }

    #[inline]
    pub fn get(&self, x: u8, y: u8) -> u32 {
        self.counts[(x as usize) << 8 | y as usize]
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn source(&self) -> Source {
        self.source
    }

    pub fn offset(&self) -> Offset {
        self.offset
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn max(&self) -> u32 {
        self.counts.iter().copied().max().unwrap_or(0)
    }
}

/// Counts value pairs between two sample sequences laid out on the same grid.
///
/// `first` and `second` are interleaved buffers with `stride` samples per
/// pixel; `first_band`/`second_band` select the sample within a pixel.
fn count_pairs(
    buf: &[u8],
    stride: usize,
    first_band: usize,
    second_band: usize,
    width: usize,
    height: usize,
    offset: Offset,
) -> Result<Box<[u32]>> {
    offset.pair_count(height, width)?;
    let mut counts = vec![0u32; CELLS].into_boxed_slice();
    let counts_arr: &mut [u32; CELLS] = (&mut *counts).try_into().expect("grid size");

    let (da, db) = (offset.da as isize, offset.db as isize);
    let rows = (0isize.max(-da) as usize)..((height as isize).min(height as isize - da) as usize);
    let cols = (0isize.max(-db) as usize)..((width as isize).min(width as isize - db) as usize);
    let row_len = width * stride;
    for a in rows {
        let a2 = (a as isize + da) as usize;
        let src = &buf[a * row_len..(a + 1) * row_len];
        let dst = &buf[a2 * row_len..(a2 + 1) * row_len];
        let shift = db * stride as isize;
        let first = src[cols.start * stride..cols.end * stride].chunks_exact(stride);
        let start2 = (cols.start as isize * stride as isize + shift) as usize;
        let second = dst[start2..start2 + cols.len() * stride].chunks_exact(stride);
        for (p, q) in first.zip(second) {
            let idx = (p[first_band] as u16) << 8 | q[second_band] as u16;
            counts_arr[idx as usize] += 1;
        }
    }
    Ok(counts)
}

/// Spatial co-occurrence matrix of one plane.
///
/// `counts[x][y]` is the number of positions `(a, b)` with `plane(a, b) = x`
/// and `plane(a + da, b + db) = y`, both in bounds.
pub fn spatial_cooc(plane: &Plane, offset: Offset) -> Result<CoocMatrix> {
    let counts = count_pairs(plane.data(), 1, 0, 0, plane.width(), plane.height(), offset)?;
    Ok(CoocMatrix { counts, source: Source::Red, offset })
}

/// Spatial co-occurrence of one band, read directly from the interleaved image.
pub fn band_cooc(img: &RgbImage, band: Band, offset: Offset) -> Result<CoocMatrix> {
    let b = band.offset();
    let counts = count_pairs(img.data(), 3, b, b, img.width(), img.height(), offset)?;
    let source = match band {
        Band::Red => Source::Red,
        Band::Green => Source::Green,
        Band::Blue => Source::Blue,
    };
    Ok(CoocMatrix { counts, source, offset })
}

/// Cross-band co-occurrence matrix.
///
/// The first pixel of each pair is read from the pair's first band at
/// `(a, b)`, the second from its second band at `(a + da, b + db)`.
/// Passing an intra-band source computes the spatial matrix of that band.
pub fn cross_cooc(img: &RgbImage, pair: Source, offset: Offset) -> Result<CoocMatrix> {
    let (b1, b2) = pair.bands();
    let counts = count_pairs(img.data(), 3, b1.offset(), b2.offset(), img.width(), img.height(), offset)?;
    Ok(CoocMatrix { counts, source: pair, offset })
}

/// Probability-normalizes a matrix: every entry divided by the total pair count.
pub fn normalize(m: &CoocMatrix) -> Result<Vec<f32>> {
    let total = m.total();
    if total == 0 {
        return Err(Error::EmptyMatrix);
    }
    let inv = 1.0 / total as f64;
    Ok(m.counts.iter().map(|&c| (c as f64 * inv) as f32).collect())
}

/// Stack of normalized co-occurrence planes fed to the detector.
///
/// Stored plane-major, row-major within a plane, matching the feature file layout.
#[derive(Clone, PartialEq, Debug)]
pub struct FeatureTensor {
    planes: usize,
    data: Vec<f32>,
}

impl FeatureTensor {
    pub fn from_planes(planes: Vec<Vec<f32>>) -> Result<Self> {
        let count = planes.len();
        if count != 3 && count != 6 {
            return Err(Error::ChannelCountMismatch { expected: 6, found: count });
        }
        let mut data = Vec::with_capacity(count * CELLS);
        for p in planes {
            if p.len() != CELLS {
                return Err(Error::ShapeMismatch(format!("plane of {} cells", p.len())));
            }
            data.extend_from_slice(&p);
        }
        Ok(FeatureTensor { planes: count, data })
    }

    pub fn plane_count(&self) -> usize {
        self.planes
    }

    pub fn plane(&self, i: usize) -> &[f32] {
        &self.data[i * CELLS..(i + 1) * CELLS]
    }

    /// All planes, plane-major.
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn kind(&self) -> NetKind {
        if self.planes == 3 {
            NetKind::Conet
        } else {
            NetKind::Crossconet
        }
    }
}

/// Three-plane tensor `[Red, Green, Blue]` of spatial matrices at offset `tau`.
pub fn assemble_conet(img: &RgbImage, tau: Offset) -> Result<FeatureTensor> {
    let planes = Band::ALL
        .iter()
        .map(|&band| normalize(&band_cooc(img, band, tau)?))
        .collect::<Result<Vec<_>>>()?;
    FeatureTensor::from_planes(planes)
}

/// Six-plane tensor `[Red, Green, Blue, RG, RB, GB]`: spatial matrices at
/// `tau`, cross-band matrices at `tau_prime`.
pub fn assemble_crossconet(img: &RgbImage, tau: Offset, tau_prime: Offset) -> Result<FeatureTensor> {
    let planes = NetKind::Crossconet
        .sources()
        .iter()
        .map(|&src| {
            let offset = if matches!(src, Source::RG | Source::RB | Source::GB) { tau_prime } else { tau };
            normalize(&cross_cooc(img, src, offset)?)
        })
        .collect::<Result<Vec<_>>>()?;
    FeatureTensor::from_planes(planes)
}

/// Dispatches to [`assemble_conet`] or [`assemble_crossconet`].
pub fn assemble(img: &RgbImage, kind: NetKind, tau: Offset, tau_prime: Offset) -> Result<FeatureTensor> {
    match kind {
        NetKind::Conet => assemble_conet(img, tau),
        NetKind::Crossconet => assemble_crossconet(img, tau, tau_prime),
    }
}

/// Log-scaled 8-bit rendering of a matrix: `round(255 * ln(1+c) / ln(1+max))`.
///
/// Row `x`, column `y`. An all-zero matrix renders black.
pub fn heatmap_pixels(m: &CoocMatrix) -> Vec<u8> {
    let max = m.max();
    if max == 0 {
        return vec![0; CELLS];
    }
    let denom = (max as f64).ln_1p();
    m.counts.iter().map(|&c| (255.0 * (c as f64).ln_1p() / denom).round() as u8).collect()
}

/// Writes [`heatmap_pixels`] as a 256x256 binary PGM.
pub fn emit_heatmap(m: &CoocMatrix, path: impl AsRef<Path>) -> Result<()> {
    save_pgm(LEVELS, LEVELS, &heatmap_pixels(m), path)
}

const FEATURE_MAGIC: &[u8; 4] = b"CBCO";
const FEATURE_VERSION: u8 = 1;

pub fn encode_feature_tensor(t: &FeatureTensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 4 * t.data.len());
    out.extend_from_slice(FEATURE_MAGIC);
    out.extend_from_slice(&[FEATURE_VERSION, t.planes as u8, 0, 0]);
    for v in &t.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_feature_tensor(bytes: &[u8]) -> Result<FeatureTensor> {
    if bytes.len() < 8 || &bytes[..4] != FEATURE_MAGIC {
        return Err(Error::BadMagic);
    }
    if bytes[4] != FEATURE_VERSION {
        return Err(Error::BadVersion(bytes[4]));
    }
    let planes = bytes[5] as usize;
    if planes != 3 && planes != 6 {
        return Err(Error::ChannelCountMismatch { expected: 6, found: planes });
    }
    let body = &bytes[8..];
    if body.len() != planes * CELLS * 4 {
        return Err(Error::CorruptStream(format!("feature body of {} bytes", body.len())));
    }
    let data = body.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect();
    Ok(FeatureTensor { planes, data })
}

pub fn write_feature_file(t: &FeatureTensor, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&encode_feature_tensor(t))?;
    w.flush()?;
    Ok(())
}

pub fn read_feature_file(path: impl AsRef<Path>) -> Result<FeatureTensor> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    decode_feature_tensor(&bytes)
}

/// Reads a feature file and checks it has the plane count the caller needs.
pub fn read_feature_file_expecting(path: impl AsRef<Path>, planes: usize) -> Result<FeatureTensor> {
    let t = read_feature_file(path)?;
    if t.plane_count() != planes {
        return Err(Error::ChannelCountMismatch { expected: planes, found: t.plane_count() });
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane(width: usize, height: usize, data: &[u8]) -> Plane {
        Plane::new(width, height, data.to_vec()).unwrap()
    }

    #[test]
    fn constant_plane_single_pair() {
        let m = spatial_cooc(&plane(2, 2, &[5; 4]), Offset::new(1, 1)).unwrap();
        assert_eq!(m.get(5, 5), 1);
        assert_eq!(m.total(), 1);
    }

    #[test]
    fn row_of_three() {
        let m = spatial_cooc(&plane(3, 1, &[0, 1, 2]), Offset::new(0, 1)).unwrap();
        assert_eq!(m.get(0, 1), 1);
        assert_eq!(m.get(1, 2), 1);
        assert_eq!(m.total(), 2);
    }

    #[test]
    fn zero_offset_is_histogram() {
        let data: Vec<u8> = (0..20).map(|i| (i * 37 % 7) as u8).collect();
        let m = spatial_cooc(&plane(5, 4, &data), Offset::new(0, 0)).unwrap();
        for x in 0..=255u8 {
            for y in 0..=255u8 {
                let expected = if x == y { data.iter().filter(|&&v| v == x).count() as u32 } else { 0 };
                assert_eq!(m.get(x, y), expected);
            }
        }
    }

    #[test]
    fn negative_offsets() {
        // [[1,2],[3,4]], offset (-1,-1): only (1,1)->(0,0)
        let m = spatial_cooc(&plane(2, 2, &[1, 2, 3, 4]), Offset::new(-1, -1)).unwrap();
        assert_eq!(m.get(4, 1), 1);
        assert_eq!(m.total(), 1);
        let m = spatial_cooc(&plane(2, 2, &[1, 2, 3, 4]), Offset::new(1, -1)).unwrap();
        assert_eq!(m.get(2, 3), 1);
        assert_eq!(m.total(), 1);
    }

    #[test]
    fn offset_too_large() {
        let p = plane(3, 2, &[0; 6]);
        assert!(matches!(spatial_cooc(&p, Offset::new(2, 0)), Err(Error::OffsetTooLarge { .. })));
        assert!(matches!(spatial_cooc(&p, Offset::new(0, -3)), Err(Error::OffsetTooLarge { .. })));
        assert!(spatial_cooc(&p, Offset::new(1, 2)).is_ok());
    }

    #[test]
    fn cross_pairs() {
        let img = RgbImage::new(1, 1, vec![10, 20, 30]).unwrap();
        let m = cross_cooc(&img, Source::RB, Offset::new(0, 0)).unwrap();
        assert_eq!(m.get(10, 30), 1);
        assert_eq!(cross_cooc(&img, Source::GB, Offset::new(0, 0)).unwrap().get(20, 30), 1);
        assert_eq!(cross_cooc(&img, Source::RG, Offset::new(0, 0)).unwrap().get(10, 20), 1);
    }

    #[test]
    fn identical_bands_give_diagonal_histogram() {
        let img = RgbImage::from_fn(6, 5, |r, c| {
            let v = (r * 11 + c * 3) as u8;
            [v, v, 200 - v]
        });
        let m = cross_cooc(&img, Source::RG, Offset::new(0, 0)).unwrap();
        let red = img.plane(Band::Red);
        for x in 0..=255u8 {
            let hist = red.data().iter().filter(|&&v| v == x).count() as u32;
            assert_eq!(m.get(x, x), hist);
        }
        assert_eq!(m.total(), 30);
    }

    #[test]
    fn normalize_examples() {
        let mut counts = vec![0; CELLS];
        counts[5 << 8 | 5] = 1;
        let n = normalize(&CoocMatrix::from_counts(counts, Source::Red, Offset::default()).unwrap()).unwrap();
        assert_eq!(n[5 << 8 | 5], 1.0);
        assert_eq!(n.iter().sum::<f32>(), 1.0);

        let mut counts = vec![0; CELLS];
        counts[1] = 1;
        counts[1 << 8 | 2] = 1;
        let n = normalize(&CoocMatrix::from_counts(counts, Source::Red, Offset::default()).unwrap()).unwrap();
        assert_eq!(n[1], 0.5);
        assert_eq!(n[258], 0.5);

        let empty = CoocMatrix::from_counts(vec![0; CELLS], Source::Red, Offset::default()).unwrap();
        assert!(matches!(normalize(&empty), Err(Error::EmptyMatrix)));
    }

    #[test]
    fn conet_on_constant_gray() {
        let img = RgbImage::filled(4, 4, [77, 77, 77]);
        let t = assemble_conet(&img, Offset::new(1, 1)).unwrap();
        assert_eq!(t.plane_count(), 3);
        for i in 0..3 {
            assert_eq!(t.plane(i)[77 << 8 | 77], 1.0);
            assert_eq!(t.plane(i), t.plane(0));
        }
    }

    #[test]
    fn distinct_channels_give_distinct_planes() {
        let img = RgbImage::from_fn(8, 8, |r, c| [(r * 8 + c) as u8, (r * c) as u8, 3]);
        let t = assemble_conet(&img, Offset::new(1, 1)).unwrap();
        assert_ne!(t.plane(0), t.plane(1));
        assert_ne!(t.plane(1), t.plane(2));
    }

    #[test]
    fn crossconet_fully_correlated() {
        let img = RgbImage::from_fn(7, 5, |r, c| {
            let v = (r * 13 + c * 29) as u8;
            [v, v, v]
        });
        let t = assemble_crossconet(&img, Offset::new(0, 0), Offset::new(0, 0)).unwrap();
        assert_eq!(t.plane_count(), 6);
        for i in 1..6 {
            assert_eq!(t.plane(i), t.plane(0));
        }
    }

    #[test]
    fn crossconet_plane_order() {
        let img = RgbImage::from_fn(9, 9, |r, c| [(r * 3) as u8, (c * 5) as u8, (r + c) as u8 * 7]);
        let (tau, tp) = (Offset::new(1, 1), Offset::new(0, 1));
        let t = assemble_crossconet(&img, tau, tp).unwrap();
        let expect = [
            cross_cooc(&img, Source::Red, tau).unwrap(),
            cross_cooc(&img, Source::Green, tau).unwrap(),
            cross_cooc(&img, Source::Blue, tau).unwrap(),
            cross_cooc(&img, Source::RG, tp).unwrap(),
            cross_cooc(&img, Source::RB, tp).unwrap(),
            cross_cooc(&img, Source::GB, tp).unwrap(),
        ];
        for (i, m) in expect.iter().enumerate() {
            assert_eq!(t.plane(i), normalize(m).unwrap().as_slice(), "plane {i}");
        }
    }

    #[test]
    fn channel_shuffle_changes_only_cross_planes() {
        let img = RgbImage::from_fn(12, 12, |r, c| [(r * 20) as u8, (c * 9 + r) as u8, (r * c) as u8]);
        // swap green and blue
        let shuffled = img.permute_bands([Band::Red, Band::Blue, Band::Green]);
        let a = assemble_crossconet(&img, Offset::new(1, 1), Offset::new(1, 1)).unwrap();
        let b = assemble_crossconet(&shuffled, Offset::new(1, 1), Offset::new(1, 1)).unwrap();
        assert_eq!(a.plane(0), b.plane(0));
        assert_eq!(a.plane(1), b.plane(2));
        assert_eq!(a.plane(2), b.plane(1));
        assert_ne!(a.plane(3), b.plane(3));
        assert_ne!(a.plane(5), b.plane(5));
    }

    #[test]
    fn heatmap_rules() {
        let mut counts = vec![0; CELLS];
        counts[3 << 8 | 9] = 17;
        let m = CoocMatrix::from_counts(counts, Source::Red, Offset::default()).unwrap();
        let px = heatmap_pixels(&m);
        assert_eq!(px[3 << 8 | 9], 255);
        assert_eq!(px.iter().filter(|&&v| v != 0).count(), 1);

        let m = CoocMatrix::from_counts(vec![4; CELLS], Source::Red, Offset::default()).unwrap();
        assert!(heatmap_pixels(&m).iter().all(|&v| v == 255));
    }

    #[test]
    fn heatmap_argmax() {
        let counts: Vec<u32> = (0..CELLS as u32).map(|i| (i.wrapping_mul(2654435761) >> 20) % 1000).collect();
        let argmax = (0..CELLS).max_by_key(|&i| (counts[i], std::cmp::Reverse(i))).unwrap();
        let m = CoocMatrix::from_counts(counts, Source::Red, Offset::default()).unwrap();
        let px = heatmap_pixels(&m);
        assert_eq!(px[argmax], 255);
        assert_eq!(*px.iter().max().unwrap(), 255);
    }

    #[test]
    fn feature_bytes_roundtrip_and_errors() {
        let img = RgbImage::from_fn(5, 5, |r, c| [(r * 40) as u8, (c * 40) as u8, 9]);
        let t = assemble_crossconet(&img, Offset::new(1, 1), Offset::new(1, 1)).unwrap();
        let bytes = encode_feature_tensor(&t);
        assert_eq!(&bytes[..8], b"CBCO\x01\x06\x00\x00");
        assert_eq!(decode_feature_tensor(&bytes).unwrap(), t);

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_feature_tensor(&bad), Err(Error::BadMagic)));
        assert!(matches!(decode_feature_tensor(&bytes[..100]), Err(Error::CorruptStream(_))));
    }

    #[test]
    fn feature_file_plane_count_check() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.cbco");
        let img = RgbImage::filled(3, 3, [1, 2, 3]);
        write_feature_file(&assemble_conet(&img, Offset::default()).unwrap(), &path).unwrap();
        assert!(matches!(
            read_feature_file_expecting(&path, 6),
            Err(Error::ChannelCountMismatch { expected: 6, found: 3 })
        ));
        assert_eq!(read_feature_file_expecting(&path, 3).unwrap().plane_count(), 3);
    }

    #[test]
    fn offset_parse() {
        assert_eq!("1,-2".parse::<Offset>().unwrap(), Offset::new(1, -2));
        assert!("1".parse::<Offset>().is_err());
        assert_eq!(Offset::new(-3, 4).to_string(), "-3,4");
    }
}
