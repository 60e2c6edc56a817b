//! Same-padded, stride-1 2-D convolution kernels.
//!
//! Layouts: activations `[C][H][W]`, weights `[F][C][k][k]`, biases `[F]`.
//! The generic routines are the reference and serve every scalar type; `f32`
//! additionally gets AVX-512 kernels selected at run time. The vector kernels
//! work on zero-padded copies whose width is rounded up to the vector tile, so
//! every load stays in bounds and padded lanes contribute exact zeros.

use super::Scalar;

/// Shape of one convolution.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ConvGeom {
    pub channels: usize,
    pub filters: usize,
    pub kernel: usize,
    pub height: usize,
    pub width: usize,
}

impl ConvGeom {
    pub fn pad(&self) -> usize {
        self.kernel / 2
    }

    pub fn input_len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub fn output_len(&self) -> usize {
        self.filters * self.height * self.width
    }

    pub fn weight_len(&self) -> usize {
        self.filters * self.channels * self.kernel * self.kernel
    }
}

/// Copies `[C][H][W]` into a zero buffer of `[C][H+2p][row]`, offset by `p` on both axes.
fn pad_input<T: Scalar>(x: &[T], c: usize, h: usize, w: usize, p: usize, row: usize) -> Vec<T> {
    let hp = h + 2 * p;
    let mut xp = vec![T::zero(); c * hp * row];
    for ci in 0..c {
        for y in 0..h {
            let dst = ci * hp * row + (y + p) * row + p;
            xp[dst..dst + w].copy_from_slice(&x[(ci * h + y) * w..][..w]);
        }
    }
    xp
}

/// Reference forward pass: `out[f] = b[f] + sum_c corr(x[c], w[f][c])`.
pub fn conv_forward_generic<T: Scalar>(g: &ConvGeom, x: &[T], w: &[T], b: &[T], out: &mut [T]) {
    let ConvGeom { channels, filters, kernel: k, height: h, width: wd } = *g;
    let p = g.pad();
    let (hp, wp) = (h + 2 * p, wd + 2 * p);
    let xp = pad_input(x, channels, h, wd, p, wp);
    for f in 0..filters {
        let plane = &mut out[f * h * wd..(f + 1) * h * wd];
        plane.fill(b[f]);
        for ci in 0..channels {
            for ky in 0..k {
                for kx in 0..k {
                    let wv = w[((f * channels + ci) * k + ky) * k + kx];
                    for y in 0..h {
                        let src = &xp[ci * hp * wp + (y + ky) * wp + kx..][..wd];
                        let dst = &mut plane[y * wd..(y + 1) * wd];
                        for (d, &s) in dst.iter_mut().zip(src) {
                            *d = *d + wv * s;
                        }
                    }
                }
            }
        }
    }
}

/// Weights for the input-gradient pass: `w'[c][f][u][v] = w[f][c][k-1-u][k-1-v]`.
fn flip_transpose<T: Scalar>(g: &ConvGeom, w: &[T]) -> Vec<T> {
    let ConvGeom { channels, filters, kernel: k, .. } = *g;
    let mut out = vec![T::zero(); w.len()];
    for f in 0..filters {
        for c in 0..channels {
            for u in 0..k {
                for v in 0..k {
                    out[((c * filters + f) * k + u) * k + v] = w[((f * channels + c) * k + (k - 1 - u)) * k + (k - 1 - v)];
                }
            }
        }
    }
    out
}

fn transposed_geom(g: &ConvGeom) -> ConvGeom {
    ConvGeom { channels: g.filters, filters: g.channels, ..*g }
}

/// Reference backward pass. Accumulates into `dw`/`db`; overwrites `dx` when given.
pub fn conv_backward_generic<T: Scalar>(
    g: &ConvGeom,
    x: &[T],
    w: &[T],
    dy: &[T],
    dx: Option<&mut [T]>,
    dw: &mut [T],
    db: &mut [T],
) {
    let ConvGeom { channels, filters, kernel: k, height: h, width: wd } = *g;
    let p = g.pad();
    let (hp, wp) = (h + 2 * p, wd + 2 * p);
    let xp = pad_input(x, channels, h, wd, p, wp);
    for f in 0..filters {
        let dplane = &dy[f * h * wd..(f + 1) * h * wd];
        db[f] = db[f] + dplane.iter().copied().fold(T::zero(), |a, v| a + v);
        for ci in 0..channels {
            for ky in 0..k {
                for kx in 0..k {
                    let mut acc = T::zero();
                    for y in 0..h {
                        let src = &xp[ci * hp * wp + (y + ky) * wp + kx..][..wd];
                        let d = &dplane[y * wd..(y + 1) * wd];
                        acc = acc + d.iter().zip(src).fold(T::zero(), |a, (&u, &v)| a + u * v);
                    }
                    let i = ((f * channels + ci) * k + ky) * k + kx;
                    dw[i] = dw[i] + acc;
                }
            }
        }
    }
    if let Some(dx) = dx {
        let zeros = vec![T::zero(); channels];
        conv_forward_generic(&transposed_geom(g), dy, &flip_transpose(g, w), &zeros, dx);
    }
}

/// Whether the vectorized `f32` kernels can run on this CPU.
pub fn simd_available() -> bool {
    #[cfg(target_arch = "x86_64")]
    {
        std::arch::is_x86_feature_detected!("avx512f")
    }
    #[cfg(not(target_arch = "x86_64"))]
    {
        false
    }
}

fn simd_kernel_supported(k: usize) -> bool {
    matches!(k, 1 | 3 | 5) && simd_available()
}

fn round_up(v: usize, m: usize) -> usize {
    v.div_ceil(m) * m
}

/// Forward pass with the vector kernel when available, otherwise the reference.
pub fn conv_forward_f32(g: &ConvGeom, x: &[f32], w: &[f32], b: &[f32], out: &mut [f32]) {
    if !simd_kernel_supported(g.kernel) {
        return conv_forward_generic(g, x, w, b, out);
    }
    #[cfg(target_arch = "x86_64")]
    {
        let ConvGeom { channels, filters, kernel: k, height: h, width: wd } = *g;
        let p = g.pad();
        let wr = round_up(wd, avx512::TILE);
        let fr = round_up(filters, avx512::FILTER_BLOCK);
        let xp = pad_input(x, channels, h, wd, p, wr + 2 * p);
        // [C][k][k][Fr], zero-filled beyond `filters`
        let mut wt = vec![0f32; channels * k * k * fr];
        for f in 0..filters {
            for ci in 0..channels {
                for t in 0..k * k {
                    wt[(ci * k * k + t) * fr + f] = w[(f * channels + ci) * k * k + t];
                }
            }
        }
        let mut tmp = vec![0f32; fr * h * wr];
        // SAFETY: avx512f presence checked above; buffer extents match the geometry.
        unsafe {
            match k {
                1 => avx512::forward::<1>(&xp, &wt, channels, h, wr, fr, &mut tmp),
                3 => avx512::forward::<3>(&xp, &wt, channels, h, wr, fr, &mut tmp),
                _ => avx512::forward::<5>(&xp, &wt, channels, h, wr, fr, &mut tmp),
            }
        }
        for f in 0..filters {
            for y in 0..h {
                let src = &tmp[(f * h + y) * wr..][..wd];
                let dst = &mut out[(f * h + y) * wd..][..wd];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d = s + b[f];
                }
            }
        }
    }
}

/// Backward pass with vector kernels when available, otherwise the reference.
pub fn conv_backward_f32(
    g: &ConvGeom,
    x: &[f32],
    w: &[f32],
    dy: &[f32],
    dx: Option<&mut [f32]>,
    dw: &mut [f32],
    db: &mut [f32],
) {
    if !simd_kernel_supported(g.kernel) {
        return conv_backward_generic(g, x, w, dy, dx, dw, db);
    }
    #[cfg(target_arch = "x86_64")]
    {
        let ConvGeom { channels, filters, kernel: k, height: h, width: wd } = *g;
        let p = g.pad();
        let wr = round_up(wd, avx512::TILE);
        let fr = round_up(filters, avx512::GRAD_BLOCK);
        let xp = pad_input(x, channels, h, wd, p, wr + 2 * p);
        let mut dyp = vec![0f32; fr * h * wr];
        for f in 0..filters {
            let plane = &dy[f * h * wd..(f + 1) * h * wd];
            let mut sum = 0f32;
            for y in 0..h {
                let row = &plane[y * wd..(y + 1) * wd];
                dyp[(f * h + y) * wr..][..wd].copy_from_slice(row);
                sum += row.iter().sum::<f32>();
            }
            db[f] += sum;
        }
        // SAFETY: avx512f presence checked above; buffer extents match the geometry.
        unsafe {
            match k {
                1 => avx512::weight_grad::<1>(&xp, &dyp, channels, h, wr, filters, dw),
                3 => avx512::weight_grad::<3>(&xp, &dyp, channels, h, wr, filters, dw),
                _ => avx512::weight_grad::<5>(&xp, &dyp, channels, h, wr, filters, dw),
            }
        }
        if let Some(dx) = dx {
            let zeros = vec![0f32; channels];
            conv_forward_f32(&transposed_geom(g), dy, &flip_transpose(g, w), &zeros, dx);
        }
    }
}

#[cfg(target_arch = "x86_64")]
mod avx512 {
    use std::arch::x86_64::*;

    /// Output columns per register tile (two 16-lane vectors).
    pub const TILE: usize = 32;
    /// Filters accumulated together in the forward kernel.
    pub const FILTER_BLOCK: usize = 8;
    /// Filters accumulated together in the weight-gradient kernel.
    pub const GRAD_BLOCK: usize = 4;

    /// `xp`: `[C][h+2p][wr+2p]`; `wt`: `[C][K][K][fr]`; `out`: `[fr][h][wr]`.
    #[target_feature(enable = "avx512f")]
    pub unsafe fn forward<const K: usize>(
        xp: &[f32],
        wt: &[f32],
        c: usize,
        h: usize,
        wr: usize,
        fr: usize,
        out: &mut [f32],
    ) {
        let p = K / 2;
        let (hp, wp) = (h + 2 * p, wr + 2 * p);
        debug_assert!(xp.len() >= c * hp * wp && wt.len() >= c * K * K * fr && out.len() >= fr * h * wr);
        let (xpp, wtp, op) = (xp.as_ptr(), wt.as_ptr(), out.as_mut_ptr());
        for y in 0..h {
            for f0 in (0..fr).step_by(FILTER_BLOCK) {
                for x0 in (0..wr).step_by(TILE) {
                    let mut acc = [_mm512_setzero_ps(); 2 * FILTER_BLOCK];
                    for ci in 0..c {
                        for ky in 0..K {
                            let row = xpp.add(ci * hp * wp + (y + ky) * wp + x0);
                            let wrow = wtp.add((ci * K + ky) * K * fr + f0);
                            for kx in 0..K {
                                let r0 = _mm512_loadu_ps(row.add(kx));
                                let r1 = _mm512_loadu_ps(row.add(kx + 16));
                                let wq = wrow.add(kx * fr);
                                for fi in 0..FILTER_BLOCK {
                                    let wv = _mm512_set1_ps(*wq.add(fi));
                                    acc[2 * fi] = _mm512_fmadd_ps(wv, r0, acc[2 * fi]);
                                    acc[2 * fi + 1] = _mm512_fmadd_ps(wv, r1, acc[2 * fi + 1]);
                                }
                            }
                        }
                    }
                    for fi in 0..FILTER_BLOCK {
                        let o = op.add(((f0 + fi) * h + y) * wr + x0);
                        _mm512_storeu_ps(o, acc[2 * fi]);
                        _mm512_storeu_ps(o.add(16), acc[2 * fi + 1]);
                    }
                }
            }
        }
    }

    /// Accumulates `dw[f][c][ky][kx] += sum_{y,x} dy[f][y][x] * xp[c][y+ky][x+kx]`
    /// for `f < filters`. `dy` is `[round_up(filters, GRAD_BLOCK)][h][wr]`, zero padded.
    #[target_feature(enable = "avx512f")]
    pub unsafe fn weight_grad<const K: usize>(
        xp: &[f32],
        dy: &[f32],
        c: usize,
        h: usize,
        wr: usize,
        filters: usize,
        dw: &mut [f32],
    ) {
        let p = K / 2;
        let (hp, wp) = (h + 2 * p, wr + 2 * p);
        let fr = filters.div_ceil(GRAD_BLOCK) * GRAD_BLOCK;
        debug_assert!(xp.len() >= c * hp * wp && dy.len() >= fr * h * wr);
        debug_assert!(dw.len() >= filters * c * K * K);
        let (xpp, dyp) = (xp.as_ptr(), dy.as_ptr());
        let plane = h * wr;
        for ci in 0..c {
            for ky in 0..K {
                for f0 in (0..fr).step_by(GRAD_BLOCK) {
                    let mut acc = [[_mm512_setzero_ps(); K]; GRAD_BLOCK];
                    for y in 0..h {
                        let xrow = xpp.add(ci * hp * wp + (y + ky) * wp);
                        let drow = dyp.add(f0 * plane + y * wr);
                        for x0 in (0..wr).step_by(16) {
                            let mut d = [_mm512_setzero_ps(); GRAD_BLOCK];
                            for (fi, dv) in d.iter_mut().enumerate() {
                                *dv = _mm512_loadu_ps(drow.add(fi * plane + x0));
                            }
                            for kx in 0..K {
                                let xv = _mm512_loadu_ps(xrow.add(x0 + kx));
                                for fi in 0..GRAD_BLOCK {
                                    acc[fi][kx] = _mm512_fmadd_ps(d[fi], xv, acc[fi][kx]);
                                }
                            }
                        }
                    }
                    for (fi, row) in acc.iter().enumerate() {
                        let f = f0 + fi;
                        if f >= filters {
                            break;
                        }
                        for (kx, v) in row.iter().enumerate() {
                            dw[((f * c + ci) * K + ky) * K + kx] += _mm512_reduce_add_ps(*v);
                        }
                    }
                }
            }
        }
    }
}
