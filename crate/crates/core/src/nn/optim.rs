use super::{Network, Scalar, Tensor};
use crate::error::{Error, Result};

/// Classical-momentum SGD state: one velocity buffer per parameter tensor.
#[derive(Clone, Debug)]
pub struct OptimizerState<T> {
    pub learning_rate: f64,
    pub momentum: f64,
    pub velocity: Vec<Tensor<T>>,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn new(net: &Network<T>, learning_rate: f64, momentum: f64) -> Self {
        Self::for_params(net.params(), learning_rate, momentum)
    }

    pub fn for_params(params: &[Tensor<T>], learning_rate: f64, momentum: f64) -> Self {
        OptimizerState {
            learning_rate,
            momentum,
            velocity: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
        }
    }
}

/// `v <- momentum * v - lr * g; p <- p + v` for every parameter.
pub fn sgd_step<T: Scalar>(params: &mut [Tensor<T>], grads: &[Tensor<T>], state: &mut OptimizerState<T>) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.velocity.len() {
        return Err(Error::ShapeMismatch("optimizer buffers do not match parameters".into()));
    }
    let (lr, mu) = (T::from_f64(state.learning_rate), T::from_f64(state.momentum));
    for ((p, g), v) in params.iter_mut().zip(grads).zip(state.velocity.iter_mut()) {
        if p.shape() != g.shape() || p.shape() != v.shape() {
            return Err(Error::ShapeMismatch(format!("parameter {:?} vs gradient {:?}", p.shape(), g.shape())));
        }
        for ((pv, &gv), vv) in p.data_mut().iter_mut().zip(g.data()).zip(v.data_mut()) {
            *vv = mu * *vv - lr * gv;
            *pv = *pv + *vv;
        }
    }
    Ok(())
}
