//! A small, deterministic neural-network engine: dense tensors, the layer
//! types the detectors need, binary cross-entropy and SGD with momentum.
//!
//! Everything is generic over [`Scalar`] so the same code runs in `f32` for
//! training and in `f64` for gradient checking.

pub mod checkpoint;
pub mod kernels;
pub mod layers;
pub mod network;
pub mod optim;

pub use layers::{bce_grad, bce_loss, sigmoid, LayerSpec};
pub use network::{Gradients, Network, Trace};
pub use optim::{sgd_step, OptimizerState};

use num_traits::Float;

use kernels::ConvGeom;

/// Floating-point element type of tensors.
pub trait Scalar: Float + Default + Send + Sync + std::fmt::Debug + std::iter::Sum + 'static {
    fn from_f64(v: f64) -> Self;

    fn as_f64(self) -> f64;

    fn conv_forward(g: &ConvGeom, x: &[Self], w: &[Self], b: &[Self], out: &mut [Self]) {
        kernels::conv_forward_generic(g, x, w, b, out)
    }

    fn conv_backward(
        g: &ConvGeom,
        x: &[Self],
        w: &[Self],
        dy: &[Self],
        dx: Option<&mut [Self]>,
        dw: &mut [Self],
        db: &mut [Self],
    ) {
        kernels::conv_backward_generic(g, x, w, dy, dx, dw, db)
    }

    /// Dot product with eight interleaved partial sums, combined in a fixed order.
    fn dot(a: &[Self], b: &[Self]) -> Self {
        let mut acc = [Self::zero(); 8];
        let chunks = a.len() / 8 * 8;
        for (ca, cb) in a[..chunks].chunks_exact(8).zip(b[..chunks].chunks_exact(8)) {
            for i in 0..8 {
                acc[i] = acc[i] + ca[i] * cb[i];
            }
        }
        let mut s = ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
        for (&x, &y) in a[chunks..].iter().zip(&b[chunks..]) {
            s = s + x * y;
        }
        s
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }

    fn as_f64(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }

    fn as_f64(self) -> f64 {
        self as f64
    }

    fn conv_forward(g: &ConvGeom, x: &[f32], w: &[f32], b: &[f32], out: &mut [f32]) {
        kernels::conv_forward_f32(g, x, w, b, out)
    }

    fn conv_backward(
        g: &ConvGeom,
        x: &[f32],
        w: &[f32],
        dy: &[f32],
        dx: Option<&mut [f32]>,
        dw: &mut [f32],
        db: &mut [f32],
    ) {
        kernels::conv_backward_f32(g, x, w, dy, dx, dw, db)
    }
}

/// Dense row-major tensor.
#[derive(Clone, PartialEq, Debug)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor { shape: shape.to_vec(), data: vec![T::zero(); shape.iter().product()] }
    }

    pub fn from_vec(shape: &[usize], data: Vec<T>) -> crate::Result<Self> {
        if shape.iter().product::<usize>() != data.len() {
            return Err(crate::Error::ShapeMismatch(format!(
                "shape {shape:?} needs {} values, got {}",
                shape.iter().product::<usize>(),
                data.len()
            )));
        }
        Ok(Tensor { shape: shape.to_vec(), data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Element-wise conversion to another scalar type.
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor { shape: self.shape.clone(), data: self.data.iter().map(|v| U::from_f64(v.as_f64())).collect() }
    }
}
