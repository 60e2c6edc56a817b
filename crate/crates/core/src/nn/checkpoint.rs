//! Binary model checkpoints.
//!
//! Layout (all integers little-endian `u32` unless noted):
//!
//! ```text
//! "CCNW" | version: u8 | 3 zero bytes
//! input rank | input extents...
//! layer count | per layer: kind: u8, arg0, arg1
//! tensor count | per tensor: rank, extents..., f32 values
//! ```
//!
//! Layer kinds: 0 conv (filters, kernel), 1 relu, 2 max-pool, 3 flatten,
//! 4 dense (units, 0), 5 sigmoid. Tensors follow layer order, weight before bias.

use std::path::Path;

use serde::Serialize;

use super::{LayerSpec, Network, Tensor};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"CCNW";
const VERSION: u8 = 1;

pub fn encode(net: &Network<f32>) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 4 * net.param_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[VERSION, 0, 0, 0]);
    let put = |out: &mut Vec<u8>, v: usize| out.extend_from_slice(&(v as u32).to_le_bytes());
    put(&mut out, net.input_shape().len());
    for &e in net.input_shape() {
        put(&mut out, e);
    }
    put(&mut out, net.specs().len());
    for spec in net.specs() {
        let (kind, a, b) = match *spec {
            LayerSpec::Conv2d { filters, kernel } => (0u8, filters, kernel),
            LayerSpec::Relu => (1, 0, 0),
            LayerSpec::MaxPool2x2 => (2, 0, 0),
            LayerSpec::Flatten => (3, 0, 0),
            LayerSpec::Dense { units } => (4, units, 0),
            LayerSpec::Sigmoid => (5, 0, 0),
        };
        out.push(kind);
        put(&mut out, a);
        put(&mut out, b);
    }
    put(&mut out, net.params().len());
    for t in net.params() {
        put(&mut out, t.shape().len());
        for &e in t.shape() {
            put(&mut out, e);
        }
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let s = self
            .bytes
            .get(self.pos..self.pos + n)
            .ok_or_else(|| Error::BadCheckpoint("truncated".into()))?;
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
    }

    fn extents(&mut self) -> Result<Vec<usize>> {
        let rank = self.u32()?;
        if rank > 8 {
            return Err(Error::BadCheckpoint(format!("tensor rank {rank}")));
        }
        (0..rank).map(|_| self.u32()).collect()
    }
}

pub fn decode(bytes: &[u8]) -> Result<Network<f32>> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(4)? != MAGIC {
        return Err(Error::BadCheckpoint("bad magic".into()));
    }
    let header = c.take(4)?;
    if header[0] != VERSION {
        return Err(Error::BadCheckpoint(format!("version {}", header[0])));
    }
    let input = c.extents()?;
    let layers = c.u32()?;
    let mut specs = Vec::with_capacity(layers);
    for _ in 0..layers {
        let kind = c.take(1)?[0];
        let (a, b) = (c.u32()?, c.u32()?);
        specs.push(match kind {
            0 => LayerSpec::Conv2d { filters: a, kernel: b },
            1 => LayerSpec::Relu,
            2 => LayerSpec::MaxPool2x2,
            3 => LayerSpec::Flatten,
            4 => LayerSpec::Dense { units: a },
            5 => LayerSpec::Sigmoid,
            k => return Err(Error::BadCheckpoint(format!("layer kind {k}"))),
        });
    }
    let count = c.u32()?;
    let mut params = Vec::with_capacity(count);
    for _ in 0..count {
        let shape = c.extents()?;
        let n: usize = shape.iter().product();
        let raw = c.take(4 * n)?;
        let data = raw.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect();
        params.push(Tensor::from_vec(&shape, data)?);
    }
    if c.pos != bytes.len() {
        return Err(Error::BadCheckpoint("trailing bytes".into()));
    }
    Network::from_parts(&input, &specs, params).map_err(|e| Error::BadCheckpoint(e.to_string()))
}

pub fn save(net: &Network<f32>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode(net))?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<Network<f32>> {
    decode(&std::fs::read(path)?)
}

/// Writes a pretty-printed JSON provenance manifest next to a checkpoint.
pub fn save_sidecar(meta: &impl Serialize, path: impl AsRef<Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(meta).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net() -> Network<f32> {
        let specs = [
            LayerSpec::Conv2d { filters: 2, kernel: 3 },
            LayerSpec::Relu,
            LayerSpec::MaxPool2x2,
            LayerSpec::Flatten,
            LayerSpec::Dense { units: 1 },
            LayerSpec::Sigmoid,
        ];
        Network::new(&[3, 4, 4], &specs, 11).unwrap()
    }

    #[test]
    fn roundtrip() {
        let n = net();
        let bytes = encode(&n);
        assert_eq!(&bytes[..5], b"CCNW\x01");
        assert_eq!(decode(&bytes).unwrap(), n);
    }

    #[test]
    fn rejects_damage() {
        let bytes = encode(&net());
        let mut bad = bytes.clone();
        bad[1] = b'X';
        assert!(matches!(decode(&bad), Err(Error::BadCheckpoint(_))));
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode(&extra).is_err());
    }
}
