//! Separable 8x8 DCT-II and its inverse, accumulated in `f64`.

use std::sync::OnceLock;

/// `basis()[x * 8 + u] = C(u) / 2 * cos((2x + 1) u pi / 16)`.
fn basis() -> &'static [f64; 64] {
    static B: OnceLock<[f64; 64]> = OnceLock::new();
    B.get_or_init(|| {
        std::array::from_fn(|i| {
            let (x, u) = (i / 8, i % 8);
            let c = if u == 0 { std::f64::consts::FRAC_1_SQRT_2 } else { 1.0 };
            c / 2.0 * ((2 * x + 1) as f64 * u as f64 * std::f64::consts::PI / 16.0).cos()
        })
    })
}

/// Forward transform of a level-shifted block, both in natural row-major order.
pub fn forward(block: &[f64; 64]) -> [f64; 64] {
    let b = basis();
    let mut rows = [0.0; 64];
    for y in 0..8 {
        for v in 0..8 {
            rows[y * 8 + v] = (0..8).map(|x| block[y * 8 + x] * b[x * 8 + v]).sum();
        }
    }
    let mut out = [0.0; 64];
    for u in 0..8 {
        for v in 0..8 {
            out[u * 8 + v] = (0..8).map(|y| rows[y * 8 + v] * b[y * 8 + u]).sum();
        }
    }
    out
}

/// Inverse transform; output is still level-shifted.
pub fn inverse(coef: &[f64; 64]) -> [f64; 64] {
    let b = basis();
    let mut cols = [0.0; 64];
    for u in 0..8 {
        for x in 0..8 {
            cols[u * 8 + x] = (0..8).map(|v| coef[u * 8 + v] * b[x * 8 + v]).sum();
        }
    }
    let mut out = [0.0; 64];
    for y in 0..8 {
        for x in 0..8 {
            out[y * 8 + x] = (0..8).map(|u| cols[u * 8 + x] * b[y * 8 + u]).sum();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Textbook quadruple sum, independent of the separable factorization.
    fn direct(block: &[f64; 64]) -> [f64; 64] {
        let pi = std::f64::consts::PI;
        let c = |k: usize| if k == 0 { 1.0 / 2f64.sqrt() } else { 1.0 };
        std::array::from_fn(|i| {
            let (u, v) = (i / 8, i % 8);
            let mut s = 0.0;
            for y in 0..8 {
                for x in 0..8 {
                    s += block[y * 8 + x]
                        * ((2 * y + 1) as f64 * u as f64 * pi / 16.0).cos()
                        * ((2 * x + 1) as f64 * v as f64 * pi / 16.0).cos();
                }
            }
            0.25 * c(u) * c(v) * s
        })
    }

    fn sample_block() -> [f64; 64] {
        std::array::from_fn(|i| ((i * 37 + 11) % 255) as f64 - 128.0)
    }

    #[test]
    fn matches_direct_sum() {
        let blk = sample_block();
        for (a, b) in forward(&blk).iter().zip(direct(&blk)) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let blk = sample_block();
        for (a, b) in inverse(&forward(&blk)).iter().zip(blk) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_block_is_dc_only() {
        let f = forward(&[10.0; 64]);
        assert!((f[0] - 80.0).abs() < 1e-9);
        assert!(f[1..].iter().all(|v| v.abs() < 1e-9));
    }
}
