use serde::{Deserialize, Serialize};

use super::kernels::ConvGeom;
use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// One layer of a sequential network.
///
/// Convolutions are stride 1 with same (zero) padding; pooling is 2x2 with stride 2.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum LayerSpec {
    Conv2d { filters: usize, kernel: usize },
    Relu,
    MaxPool2x2,
    Flatten,
    Dense { units: usize },
    Sigmoid,
}

/// Clamp applied to predictions before taking logarithms.
pub const BCE_EPS: f64 = 1e-7;

pub fn conv2d_forward<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let g = conv_geom(x.shape(), w.shape(), b.shape())?;
    let mut out = Tensor::zeros(&[g.filters, g.height, g.width]);
    T::conv_forward(&g, x.data(), w.data(), b.data(), out.data_mut());
    Ok(out)
}

/// Gradients of a convolution: `(dx, dw, db)`.
pub fn conv2d_backward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    b: &Tensor<T>,
    dy: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let g = conv_geom(x.shape(), w.shape(), b.shape())?;
    if dy.shape() != [g.filters, g.height, g.width] {
        return Err(Error::ShapeMismatch(format!("conv upstream {:?}", dy.shape())));
    }
    let mut dx = Tensor::zeros(x.shape());
    let mut dw = Tensor::zeros(w.shape());
    let mut db = Tensor::zeros(b.shape());
    T::conv_backward(&g, x.data(), w.data(), dy.data(), Some(dx.data_mut()), dw.data_mut(), db.data_mut());
    Ok((dx, dw, db))
}

pub(crate) fn conv_geom(x: &[usize], w: &[usize], b: &[usize]) -> Result<ConvGeom> {
    match (x, w, b) {
        (&[c, h, wd], &[f, wc, k, k2], &[bf]) if c == wc && k == k2 && k % 2 == 1 && bf == f => {
            Ok(ConvGeom { channels: c, filters: f, kernel: k, height: h, width: wd })
        }
        _ => Err(Error::ShapeMismatch(format!("conv input {x:?}, weight {w:?}, bias {b:?}"))),
    }
}

pub fn relu<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let data = x.data().iter().map(|&v| if v > T::zero() { v } else { T::zero() }).collect();
    Tensor::from_vec(x.shape(), data).expect("same shape")
}

/// Passes gradient where the forward input was positive.
pub fn relu_backward<T: Scalar>(x: &Tensor<T>, dy: &Tensor<T>) -> Result<Tensor<T>> {
    same_shape(x, dy)?;
    let data = x.data().iter().zip(dy.data()).map(|(&v, &d)| if v > T::zero() { d } else { T::zero() }).collect();
    Tensor::from_vec(x.shape(), data)
}

/// 2x2 max pooling, stride 2. Returns the pooled tensor and, per output, the
/// flat input index of the first (row-major) maximal element.
pub fn maxpool2x2<T: Scalar>(x: &Tensor<T>) -> Result<(Tensor<T>, Vec<usize>)> {
    let &[c, h, w] = x.shape() else {
        return Err(Error::ShapeMismatch(format!("pool input {:?}", x.shape())));
    };
    let (oh, ow) = (h / 2, w / 2);
    if oh == 0 || ow == 0 {
        return Err(Error::ShapeMismatch(format!("pool input {:?} too small", x.shape())));
    }
    let mut out = Vec::with_capacity(c * oh * ow);
    let mut arg = Vec::with_capacity(c * oh * ow);
    let d = x.data();
    for ci in 0..c {
        for y in 0..oh {
            for xx in 0..ow {
                let base = (ci * h + 2 * y) * w + 2 * xx;
                let mut best = base;
                for idx in [base + 1, base + w, base + w + 1] {
                    if d[idx] > d[best] {
                        best = idx;
                    }
                }
                out.push(d[best]);
                arg.push(best);
            }
        }
    }
    Ok((Tensor::from_vec(&[c, oh, ow], out)?, arg))
}

pub fn maxpool_backward<T: Scalar>(input_shape: &[usize], argmax: &[usize], dy: &Tensor<T>) -> Result<Tensor<T>> {
    if argmax.len() != dy.len() {
        return Err(Error::ShapeMismatch("pool upstream gradient".into()));
    }
    let mut dx = Tensor::zeros(input_shape);
    let g = dx.data_mut();
    for (&i, &d) in argmax.iter().zip(dy.data()) {
        g[i] = g[i] + d;
    }
    Ok(dx)
}

/// `y = W x + b` with `W` of shape `[units, inputs]`.
pub fn dense<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let (units, inputs) = dense_dims(x, w, b)?;
    let wd = w.data();
    let out = (0..units).map(|o| b.data()[o] + T::dot(&wd[o * inputs..(o + 1) * inputs], x.data())).collect();
    Tensor::from_vec(&[units], out)
}

/// Gradients of a dense layer: `(dx, dw, db)`.
pub fn dense_backward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    b: &Tensor<T>,
    dy: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let (units, inputs) = dense_dims(x, w, b)?;
    if dy.len() != units {
        return Err(Error::ShapeMismatch("dense upstream gradient".into()));
    }
    let mut dx = Tensor::zeros(&[inputs]);
    let mut dw = Tensor::zeros(w.shape());
    dense_accumulate(x.data(), w.data(), dy.data(), Some(dx.data_mut()), dw.data_mut());
    Ok((dx, dw, Tensor::from_vec(b.shape(), dy.data().to_vec())?))
}

/// Accumulates `dw += dy x^T` and, when requested, writes `dx = W^T dy`.
pub(crate) fn dense_accumulate<T: Scalar>(x: &[T], w: &[T], dy: &[T], dx: Option<&mut [T]>, dw: &mut [T]) {
    let inputs = x.len();
    for (o, &d) in dy.iter().enumerate() {
        if d == T::zero() {
            continue;
        }
        for (g, &v) in dw[o * inputs..(o + 1) * inputs].iter_mut().zip(x) {
            *g = *g + d * v;
        }
    }
    if let Some(dx) = dx {
        dx.fill(T::zero());
        for (o, &d) in dy.iter().enumerate() {
            if d == T::zero() {
                continue;
            }
            for (g, &v) in dx.iter_mut().zip(&w[o * inputs..(o + 1) * inputs]) {
                *g = *g + d * v;
            }
        }
    }
}

fn dense_dims<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, b: &Tensor<T>) -> Result<(usize, usize)> {
    match w.shape() {
        &[units, inputs] if inputs == x.len() && b.shape() == [units] => Ok((units, inputs)),
        s => Err(Error::ShapeMismatch(format!("dense weight {s:?} for input of {}", x.len()))),
    }
}

fn same_shape<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(())
}

pub fn sigmoid<T: Scalar>(z: T) -> T {
    // split on sign so exp never overflows
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// Binary cross-entropy of a prediction in (0,1) against a 0/1 label.
pub fn bce_loss<T: Scalar>(y_hat: T, y: T) -> T {
    let eps = T::from_f64(BCE_EPS);
    let p = y_hat.max(eps).min(T::one() - eps);
    -(y * p.ln() + (T::one() - y) * (T::one() - p).ln())
}

/// Derivative of [`bce_loss`] with respect to the (clamped) prediction.
pub fn bce_grad<T: Scalar>(y_hat: T, y: T) -> T {
    let eps = T::from_f64(BCE_EPS);
    let p = y_hat.max(eps).min(T::one() - eps);
    (p - y) / (p * (T::one() - p))
}
