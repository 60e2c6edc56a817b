//! Baseline sequential encoder with the Annex K Huffman tables.

use super::dct;
use super::tables::{code_table, quality_scale, HuffSpec, AC_CHROMA, AC_LUMA, DC_CHROMA, DC_LUMA, ZIGZAG};
use super::Chroma;
use crate::error::{Error, Result};
use crate::raster::RgbImage;

struct BitWriter {
    out: Vec<u8>,
    acc: u32,
    n: u32,
}

impl BitWriter {
    fn put(&mut self, code: u32, len: u32) {
        debug_assert!(len <= 16);
        self.acc = (self.acc << len) | (code & ((1 << len) - 1));
        self.n += len;
        while self.n >= 8 {
            let byte = (self.acc >> (self.n - 8)) as u8;
            self.out.push(byte);
            if byte == 0xff {
                self.out.push(0);
            }
            self.n -= 8;
        }
        self.acc &= (1 << self.n) - 1;
    }

    /// Pads the final byte with one bits.
    fn flush(&mut self) {
        if self.n > 0 {
            let pad = 8 - self.n;
            self.put((1 << pad) - 1, pad);
        }
    }
}

/// Magnitude category and the low-order bits that encode `v`.
fn category(v: i32) -> (u32, u32) {
    let size = 32 - v.unsigned_abs().leading_zeros();
    let bits = if v < 0 { (v - 1) as u32 } else { v as u32 };
    (size, bits & ((1u32 << size) - 1))
}

struct Coder {
    dc: [(u16, u8); 256],
    ac: [(u16, u8); 256],
}

impl Coder {
    fn new(dc: &HuffSpec, ac: &HuffSpec) -> Self {
        Coder { dc: code_table(dc), ac: code_table(ac) }
    }

    fn block(&self, w: &mut BitWriter, zz: &[i32; 64], pred: &mut i32) {
        let (size, bits) = category(zz[0] - *pred);
        *pred = zz[0];
        let (code, len) = self.dc[size as usize];
        w.put(code as u32, len as u32);
        w.put(bits, size);
        let mut run = 0;
        for &v in &zz[1..] {
            if v == 0 {
                run += 1;
                continue;
            }
            while run > 15 {
                let (code, len) = self.ac[0xf0];
                w.put(code as u32, len as u32);
                run -= 16;
            }
            let (size, bits) = category(v);
            let (code, len) = self.ac[(run << 4 | size) as usize];
            w.put(code as u32, len as u32);
            w.put(bits, size);
            run = 0;
        }
        if run > 0 {
            let (code, len) = self.ac[0x00];
            w.put(code as u32, len as u32);
        }
    }
}

/// One component sampled on its own grid, edge-replicated to whole blocks.
struct PlaneBuf {
    width: usize,
    data: Vec<f64>,
}

impl PlaneBuf {
    fn block(&self, br: usize, bc: usize, quant: &[u8; 64]) -> [i32; 64] {
        let mut px = [0.0; 64];
        for y in 0..8 {
            for x in 0..8 {
                px[y * 8 + x] = self.data[(br * 8 + y) * self.width + bc * 8 + x] - 128.0;
            }
        }
        let f = dct::forward(&px);
        std::array::from_fn(|k| {
            let i = ZIGZAG[k];
            // baseline Huffman tables stop at magnitude category 10 for AC
            let limit = if k == 0 { 1024.0 } else { 1023.0 };
            (f[i] / quant[i] as f64).round().clamp(-limit, limit) as i32
        })
    }
}

fn segment(out: &mut Vec<u8>, marker: u8, body: &[u8]) {
    out.extend_from_slice(&[0xff, marker]);
    out.extend_from_slice(&((body.len() + 2) as u16).to_be_bytes());
    out.extend_from_slice(body);
}

fn dht(out: &mut Vec<u8>, class_id: u8, spec: &HuffSpec) {
    let mut body = vec![class_id];
    body.extend_from_slice(&spec.bits);
    body.extend_from_slice(spec.values);
    segment(out, 0xc4, &body);
}

/// Encodes `img` as a baseline JFIF stream at quality `qf` (clamped to [1, 100]).
pub fn encode(img: &RgbImage, qf: u8, chroma: Chroma) -> Result<Vec<u8>> {
    let (w, h) = (img.width(), img.height());
    if w > u16::MAX as usize || h > u16::MAX as usize {
        return Err(Error::BadDimensions { width: w, height: h });
    }
    let tables = quality_scale(qf);
    let sub = match chroma {
        Chroma::Full => 1,
        Chroma::Half => 2,
    };
    let (mcu_w, mcu_h) = (8 * sub, 8 * sub);
    let (mx, my) = (w.div_ceil(mcu_w), h.div_ceil(mcu_h));
    let (pw, ph) = (mx * mcu_w, my * mcu_h);

    // full-resolution YCbCr with edge replication into the padding
    let mut ycc = [vec![0.0; pw * ph], vec![0.0; pw * ph], vec![0.0; pw * ph]];
    for r in 0..ph {
        for c in 0..pw {
            let [red, green, blue] = img.pixel(r.min(h - 1), c.min(w - 1)).map(|v| v as f64);
            let i = r * pw + c;
            ycc[0][i] = 0.299 * red + 0.587 * green + 0.114 * blue;
            ycc[1][i] = -0.168736 * red - 0.331264 * green + 0.5 * blue + 128.0;
            ycc[2][i] = 0.5 * red - 0.418688 * green - 0.081312 * blue + 128.0;
        }
    }
    let [y, cb, cr] = ycc;
    let luma = PlaneBuf { width: pw, data: y };
    let down = |full: Vec<f64>| {
        if sub == 1 {
            return PlaneBuf { width: pw, data: full };
        }
        let (cw, ch) = (pw / 2, ph / 2);
        let mut data = vec![0.0; cw * ch];
        for r in 0..ch {
            for c in 0..cw {
                let at = |dr: usize, dc: usize| full[(2 * r + dr) * pw + 2 * c + dc];
                data[r * cw + c] = (at(0, 0) + at(0, 1) + at(1, 0) + at(1, 1)) / 4.0;
            }
        }
        PlaneBuf { width: cw, data }
    };
    let (cb, cr) = (down(cb), down(cr));

    let mut out = vec![0xff, 0xd8];
    segment(&mut out, 0xe0, b"JFIF\0\x01\x01\x00\x00\x01\x00\x01\x00\x00");
    let mut dqt = vec![0u8];
    dqt.extend(ZIGZAG.iter().map(|&i| tables.luminance[i]));
    dqt.push(1);
    dqt.extend(ZIGZAG.iter().map(|&i| tables.chrominance[i]));
    segment(&mut out, 0xdb, &dqt);
    let samp = ((sub as u8) << 4) | sub as u8;
    let mut sof = vec![8];
    sof.extend_from_slice(&(h as u16).to_be_bytes());
    sof.extend_from_slice(&(w as u16).to_be_bytes());
    sof.extend_from_slice(&[3, 1, samp, 0, 2, 0x11, 1, 3, 0x11, 1]);
    segment(&mut out, 0xc0, &sof);
    dht(&mut out, 0x00, &DC_LUMA);
    dht(&mut out, 0x10, &AC_LUMA);
    dht(&mut out, 0x01, &DC_CHROMA);
    dht(&mut out, 0x11, &AC_CHROMA);
    segment(&mut out, 0xda, &[3, 1, 0x00, 2, 0x11, 3, 0x11, 0, 63, 0]);

    let luma_coder = Coder::new(&DC_LUMA, &AC_LUMA);
    let chroma_coder = Coder::new(&DC_CHROMA, &AC_CHROMA);
    let mut bw = BitWriter { out, acc: 0, n: 0 };
    let mut pred = [0i32; 3];
    for mr in 0..my {
        for mc in 0..mx {
            for sy in 0..sub {
                for sx in 0..sub {
                    let blk = luma.block(mr * sub + sy, mc * sub + sx, &tables.luminance);
                    luma_coder.block(&mut bw, &blk, &mut pred[0]);
                }
            }
            for (k, plane) in [&cb, &cr].into_iter().enumerate() {
                let blk = plane.block(mr, mc, &tables.chrominance);
                chroma_coder.block(&mut bw, &blk, &mut pred[k + 1]);
            }
        }
    }
    bw.flush();
    let mut out = bw.out;
    out.extend_from_slice(&[0xff, 0xd9]);
    Ok(out)
}
