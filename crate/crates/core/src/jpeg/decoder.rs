//! Baseline and extended-sequential Huffman decoder (8-bit samples).
//!
//! Handles 1- or 3-component frames, any sampling factors up to 4,
//! interleaved and single-component scans, and restart intervals.
//! Subsampled chroma is upsampled by replication.

use super::dct;
use super::tables::ZIGZAG;
use crate::error::{Error, Result};
use crate::raster::RgbImage;

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptStream(msg.into())
}

#[derive(Clone)]
struct Huffman {
    maxcode: [i32; 17],
    valptr: [i32; 17],
    mincode: [i32; 17],
    values: Vec<u8>,
}

impl Huffman {
    fn new(bits: &[u8; 16], values: Vec<u8>) -> Result<Self> {
        let total: usize = bits.iter().map(|&b| b as usize).sum();
        if total != values.len() || total > 256 {
            return Err(corrupt("huffman table size"));
        }
        let (mut maxcode, mut valptr, mut mincode) = ([-1i32; 17], [0i32; 17], [0i32; 17]);
        let (mut code, mut k) = (0i32, 0i32);
        for len in 1..=16 {
            let n = bits[len - 1] as i32;
            if n > 0 {
                valptr[len] = k;
                mincode[len] = code;
                code += n;
                k += n;
                maxcode[len] = code - 1;
            }
            if code > 1 << len {
                return Err(corrupt("over-subscribed huffman table"));
            }
            code <<= 1;
        }
        Ok(Huffman { maxcode, valptr, mincode, values })
    }
}

struct Component {
    id: u8,
    h: usize,
    v: usize,
    tq: usize,
    /// Block grid, padded to whole MCUs.
    bw: usize,
    bh: usize,
    coefs: Vec<i32>,
}

struct Frame {
    width: usize,
    height: usize,
    hmax: usize,
    vmax: usize,
    comps: Vec<Component>,
}

impl Frame {
    fn mcus(&self) -> (usize, usize) {
        (self.width.div_ceil(8 * self.hmax), self.height.div_ceil(8 * self.vmax))
    }
}

struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
    acc: u32,
    n: u32,
    marker: Option<u8>,
}

impl BitReader<'_> {
    fn fill(&mut self) {
        while self.n <= 24 {
            let mut byte = 0u8;
            if self.marker.is_none() && self.pos < self.data.len() {
                byte = self.data[self.pos];
                if byte == 0xff {
                    match self.data.get(self.pos + 1) {
                        Some(0) => self.pos += 2,
                        Some(&m) => {
                            self.marker = Some(m);
                            byte = 0;
                        }
                        None => {
                            self.pos += 1;
                            byte = 0;
                        }
                    }
                } else {
                    self.pos += 1;
                }
            }
            // past the end of entropy data the stream reads as zeros
            self.acc |= (byte as u32) << (24 - self.n);
            self.n += 8;
        }
    }

    fn bits(&mut self, count: u32) -> u32 {
        if count == 0 {
            return 0;
        }
        self.fill();
        let v = self.acc >> (32 - count);
        self.acc <<= count;
        self.n -= count;
        v
    }

    fn decode(&mut self, t: &Huffman) -> Result<u8> {
        let mut code = 0i32;
        for len in 1..=16 {
            code = (code << 1) | self.bits(1) as i32;
            if code <= t.maxcode[len] {
                let idx = t.valptr[len] + code - t.mincode[len];
                return Ok(t.values[idx as usize]);
            }
        }
        Err(corrupt("invalid huffman code"))
    }

    fn receive_extend(&mut self, s: u32) -> i32 {
        if s == 0 {
            return 0;
        }
        let v = self.bits(s) as i32;
        if v < 1 << (s - 1) {
            v - (1 << s) + 1
        } else {
            v
        }
    }

    /// Drops buffered bits and consumes the next restart marker.
    fn restart(&mut self) -> Result<()> {
        self.acc = 0;
        self.n = 0;
        if self.marker.is_none() {
            while self.pos + 1 < self.data.len() && !(self.data[self.pos] == 0xff && self.data[self.pos + 1] != 0) {
                self.pos += 1;
            }
            self.marker = self.data.get(self.pos + 1).copied();
        }
        match self.marker {
            Some(0xd0..=0xd7) => {
                self.pos += 2;
                self.marker = None;
                Ok(())
            }
            _ => Err(corrupt("missing restart marker")),
        }
    }
}

fn read_u16(data: &[u8], pos: usize) -> Result<usize> {
    data.get(pos..pos + 2).map(|b| u16::from_be_bytes([b[0], b[1]]) as usize).ok_or_else(|| corrupt("truncated"))
}

/// Decodes a baseline or extended-sequential Huffman JPEG to RGB.
pub fn decode(bytes: &[u8]) -> Result<RgbImage> {
    decode_components(bytes)?.to_rgb()
}

/// Decodes to component planes without color conversion.
pub fn decode_components(bytes: &[u8]) -> Result<Components> {
    if bytes.len() < 4 || bytes[0] != 0xff || bytes[1] != 0xd8 {
        return Err(corrupt("missing SOI marker"));
    }
    let mut qt: [Option<[u16; 64]>; 4] = [None; 4];
    let mut dc_tables: [Option<Huffman>; 4] = Default::default();
    let mut ac_tables: [Option<Huffman>; 4] = Default::default();
    let mut frame: Option<Frame> = None;
    let mut restart_interval = 0usize;
    let mut scanned = false;
    let mut pos = 2;
    loop {
        while pos < bytes.len() && bytes[pos] != 0xff {
            pos += 1;
        }
        while pos < bytes.len() && bytes[pos] == 0xff {
            pos += 1;
        }
        let Some(&marker) = bytes.get(pos) else {
            if scanned {
                break;
            }
            return Err(corrupt("no EOI marker"));
        };
        pos += 1;
        match marker {
            0xd9 => break,
            0xd0..=0xd7 | 0x01 => continue,
            0xc2 | 0xc6 | 0xca | 0xce => return Err(Error::UnsupportedMode("progressive".into())),
            0xc3 | 0xc7 | 0xcb | 0xcf => return Err(Error::UnsupportedMode("lossless".into())),
            0xc5 => return Err(Error::UnsupportedMode("hierarchical".into())),
            0xc9 | 0xcc | 0xcd => return Err(Error::UnsupportedMode("arithmetic coding".into())),
            _ => {}
        }
        let len = read_u16(bytes, pos)?;
        let seg = bytes.get(pos + 2..pos + len).ok_or_else(|| corrupt("truncated segment"))?;
        if len < 2 {
            return Err(corrupt("segment length"));
        }
        pos += len;
        match marker {
            0xc0 | 0xc1 => frame = Some(parse_frame(seg)?),
            0xc4 => parse_dht(seg, &mut dc_tables, &mut ac_tables)?,
            0xdb => parse_dqt(seg, &mut qt)?,
            0xdd => restart_interval = read_u16(seg, 0)?,
            0xda => {
                let f = frame.as_mut().ok_or_else(|| corrupt("scan before frame header"))?;
                pos = decode_scan(bytes, pos, seg, f, &dc_tables, &ac_tables, restart_interval)?;
                scanned = true;
            }
            _ => {}
        }
    }
    let frame = frame.ok_or_else(|| corrupt("no frame header"))?;
    if !scanned {
        return Err(corrupt("no scan data"));
    }
    reconstruct(&frame, &qt)
}

fn parse_frame(seg: &[u8]) -> Result<Frame> {
    if seg.len() < 6 {
        return Err(corrupt("short frame header"));
    }
    if seg[0] != 8 {
        return Err(Error::UnsupportedMode(format!("{}-bit samples", seg[0])));
    }
    let height = read_u16(seg, 1)?;
    let width = read_u16(seg, 3)?;
    let n = seg[5] as usize;
    if height == 0 || width == 0 {
        return Err(Error::UnsupportedMode("deferred or zero dimensions".into()));
    }
    if n != 1 && n != 3 {
        return Err(Error::UnsupportedMode(format!("{n} components")));
    }
    if seg.len() < 6 + 3 * n {
        return Err(corrupt("short frame header"));
    }
    let mut comps = Vec::with_capacity(n);
    for i in 0..n {
        let c = &seg[6 + 3 * i..9 + 3 * i];
        let (h, v) = ((c[1] >> 4) as usize, (c[1] & 15) as usize);
        if !(1..=4).contains(&h) || !(1..=4).contains(&v) || c[2] > 3 {
            return Err(corrupt("component parameters"));
        }
        comps.push(Component { id: c[0], h, v, tq: c[2] as usize, bw: 0, bh: 0, coefs: vec![] });
    }
    let hmax = comps.iter().map(|c| c.h).max().unwrap_or(1);
    let vmax = comps.iter().map(|c| c.v).max().unwrap_or(1);
    let mut f = Frame { width, height, hmax, vmax, comps };
    let (mx, my) = f.mcus();
    for c in &mut f.comps {
        c.bw = mx * c.h;
        c.bh = my * c.v;
        c.coefs = vec![0; c.bw * c.bh * 64];
    }
    Ok(f)
}

fn parse_dht(mut seg: &[u8], dc: &mut [Option<Huffman>; 4], ac: &mut [Option<Huffman>; 4]) -> Result<()> {
    while !seg.is_empty() {
        if seg.len() < 17 {
            return Err(corrupt("short DHT"));
        }
        let (class, id) = (seg[0] >> 4, (seg[0] & 15) as usize);
        if class > 1 || id > 3 {
            return Err(corrupt("DHT class or id"));
        }
        let bits: [u8; 16] = seg[1..17].try_into().expect("16 bytes");
        let total: usize = bits.iter().map(|&b| b as usize).sum();
        let values = seg.get(17..17 + total).ok_or_else(|| corrupt("short DHT"))?.to_vec();
        let table = Some(Huffman::new(&bits, values)?);
        if class == 0 {
            dc[id] = table;
        } else {
            ac[id] = table;
        }
        seg = &seg[17 + total..];
    }
    Ok(())
}

fn parse_dqt(mut seg: &[u8], qt: &mut [Option<[u16; 64]>; 4]) -> Result<()> {
    while !seg.is_empty() {
        let (precision, id) = (seg[0] >> 4, (seg[0] & 15) as usize);
        if id > 3 || precision > 1 {
            return Err(corrupt("DQT id or precision"));
        }
        let size = if precision == 0 { 64 } else { 128 };
        let body = seg.get(1..1 + size).ok_or_else(|| corrupt("short DQT"))?;
        let mut table = [0u16; 64];
        for k in 0..64 {
            table[ZIGZAG[k]] =
                if precision == 0 { body[k] as u16 } else { u16::from_be_bytes([body[2 * k], body[2 * k + 1]]) };
        }
        qt[id] = Some(table);
        seg = &seg[1 + size..];
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn decode_scan(
    bytes: &[u8],
    start: usize,
    header: &[u8],
    frame: &mut Frame,
    dc_tables: &[Option<Huffman>; 4],
    ac_tables: &[Option<Huffman>; 4],
    restart_interval: usize,
) -> Result<usize> {
    let ns = *header.first().ok_or_else(|| corrupt("empty SOS"))? as usize;
    if ns == 0 || ns > 4 || header.len() < 1 + 2 * ns + 3 {
        return Err(corrupt("SOS header"));
    }
    let mut members = Vec::with_capacity(ns);
    for i in 0..ns {
        let (id, tables) = (header[1 + 2 * i], header[2 + 2 * i]);
        let ci = frame.comps.iter().position(|c| c.id == id).ok_or_else(|| corrupt("scan names unknown component"))?;
        let dc = dc_tables[(tables >> 4) as usize & 3].as_ref().ok_or_else(|| corrupt("missing DC table"))?;
        let ac = ac_tables[(tables & 15) as usize & 3].as_ref().ok_or_else(|| corrupt("missing AC table"))?;
        members.push((ci, dc, ac));
    }
    let (ss, se, a) = (header[1 + 2 * ns], header[2 + 2 * ns], header[3 + 2 * ns]);
    if ss != 0 || se != 63 || a != 0 {
        return Err(Error::UnsupportedMode("spectral selection or successive approximation".into()));
    }
    let mut reader = BitReader { data: bytes, pos: start, acc: 0, n: 0, marker: None };
    let mut preds = vec![0i32; ns];

    // (component slot, block row, block col) visiting order
    let (mx, my) = frame.mcus();
    let units: Vec<Vec<(usize, usize, usize)>> = if ns == 1 {
        let c = &frame.comps[members[0].0];
        let cw = (frame.width * c.h).div_ceil(frame.hmax).div_ceil(8);
        let ch = (frame.height * c.v).div_ceil(frame.vmax).div_ceil(8);
        (0..ch).flat_map(|r| (0..cw).map(move |col| vec![(0, r, col)])).collect()
    } else {
        let mut all = Vec::with_capacity(mx * my);
        for mr in 0..my {
            for mc in 0..mx {
                let mut mcu = vec![];
                for (slot, &(ci, _, _)) in members.iter().enumerate() {
                    let c = &frame.comps[ci];
                    for y in 0..c.v {
                        for x in 0..c.h {
                            mcu.push((slot, mr * c.v + y, mc * c.h + x));
                        }
                    }
                }
                all.push(mcu);
            }
        }
        all
    };

    for (i, unit) in units.iter().enumerate() {
        if restart_interval > 0 && i > 0 && i % restart_interval == 0 {
            reader.restart()?;
            preds.iter_mut().for_each(|p| *p = 0);
        }
        for &(slot, br, bc) in unit {
            let (ci, dc, ac) = members[slot];
            let comp = &mut frame.comps[ci];
            let base = (br * comp.bw + bc) * 64;
            let blk = &mut comp.coefs[base..base + 64];
            let s = reader.decode(dc)? as u32;
            if s > 11 {
                return Err(corrupt("DC magnitude category"));
            }
            preds[slot] += reader.receive_extend(s);
            blk[0] = preds[slot];
            let mut k = 1;
            while k < 64 {
                let rs = reader.decode(ac)?;
                let (run, size) = ((rs >> 4) as usize, (rs & 15) as u32);
                if size == 0 {
                    if run == 15 {
                        k += 16;
                        continue;
                    }
                    break;
                }
                k += run;
                if k > 63 {
                    return Err(corrupt("coefficient index past 63"));
                }
                blk[ZIGZAG[k]] = reader.receive_extend(size);
                k += 1;
            }
        }
    }
    // resume marker parsing at the first marker after the entropy data
    let mut pos = reader.pos;
    while pos + 1 < bytes.len() && !(bytes[pos] == 0xff && bytes[pos + 1] != 0 && !(0xd0..=0xd7).contains(&bytes[pos + 1])) {
        pos += 1;
    }
    Ok(pos)
}

fn reconstruct(frame: &Frame, qt: &[Option<[u16; 64]>; 4]) -> Result<Components> {
    let mut planes = Vec::with_capacity(frame.comps.len());
    for c in &frame.comps {
        let q = qt[c.tq].ok_or_else(|| corrupt("missing quantization table"))?;
        let pw = c.bw * 8;
        let mut plane = vec![0u8; pw * c.bh * 8];
        for br in 0..c.bh {
            for bc in 0..c.bw {
                let base = (br * c.bw + bc) * 64;
                let coef: [f64; 64] = std::array::from_fn(|i| (c.coefs[base + i] * q[i] as i32) as f64);
                let px = dct::inverse(&coef);
                for y in 0..8 {
                    for x in 0..8 {
                        plane[(br * 8 + y) * pw + bc * 8 + x] = (px[y * 8 + x] + 128.0).clamp(0.0, 255.0).round() as u8;
                    }
                }
            }
        }
        planes.push((plane, pw));
    }
    let (w, h) = (frame.width, frame.height);
    let mut out = Vec::with_capacity(planes.len());
    for (k, (plane, pw)) in planes.iter().enumerate() {
        let c = &frame.comps[k];
        let mut full = Vec::with_capacity(w * h);
        for r in 0..h {
            let row = (r * c.v / frame.vmax) * pw;
            full.extend((0..w).map(|col| plane[row + col * c.h / frame.hmax]));
        }
        out.push(full);
    }
    Ok(Components { width: w, height: h, planes: out })
}

/// Decoded component samples at full resolution, before color conversion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Components {
    pub width: usize,
    pub height: usize,
    /// One row-major plane per component: Y, or Y, Cb, Cr.
    pub planes: Vec<Vec<u8>>,
}

impl Components {
    /// BT.601 full-range YCbCr to RGB; one component is treated as gray.
    pub fn to_rgb(&self) -> Result<RgbImage> {
        let n = self.width * self.height;
        let mut data = Vec::with_capacity(3 * n);
        match self.planes.as_slice() {
            [g] => g.iter().for_each(|&v| data.extend_from_slice(&[v, v, v])),
            [y, cb, cr] => {
                for i in 0..n {
                    let (y, cb, cr) = (y[i] as f64, cb[i] as f64 - 128.0, cr[i] as f64 - 128.0);
                    let px = [y + 1.402 * cr, y - 0.344136 * cb - 0.714136 * cr, y + 1.772 * cb];
                    data.extend(px.map(|v| v.clamp(0.0, 255.0).round() as u8));
                }
            }
            _ => return Err(corrupt("component count")),
        }
        RgbImage::new(self.width, self.height, data)
    }
}
