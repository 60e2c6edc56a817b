use rand::Rng;

use super::kernels::ConvGeom;
use super::layers::{self, LayerSpec};
use super::optim::{sgd_step, OptimizerState};
use super::{Scalar, Tensor};
use crate::error::{Error, Result};
use crate::rng::generator;

/// A sequential network with a single sigmoid output.
#[derive(Clone, Debug, PartialEq)]
pub struct Network<T> {
    input_shape: Vec<usize>,
    specs: Vec<LayerSpec>,
    /// Weight and bias tensors of every parametrized layer, in layer order.
    params: Vec<Tensor<T>>,
    /// For each layer, the index of its weight tensor in `params`.
    param_of: Vec<Option<usize>>,
}

/// Activations recorded by a forward pass, consumed by [`Network::backward`].
pub struct Trace<T> {
    inputs: Vec<Tensor<T>>,
    argmax: Vec<Option<Vec<usize>>>,
    /// Pre-sigmoid output.
    pub logit: T,
}

impl<T: Scalar> Trace<T> {
    pub fn prediction(&self) -> T {
        layers::sigmoid(self.logit)
    }

    /// Input of each traced layer, in layer order.
    pub fn layer_inputs(&self) -> &[Tensor<T>] {
        &self.inputs
    }

    /// Winning input index per pooled output, for each max-pool layer.
    pub fn pool_choices(&self) -> impl Iterator<Item = &[usize]> {
        self.argmax.iter().filter_map(|a| a.as_deref())
    }
}

/// Parameter gradients, shaped like [`Network::params`].
#[derive(Clone, Debug)]
pub struct Gradients<T> {
    pub tensors: Vec<Tensor<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros_like(net: &Network<T>) -> Self {
        Gradients { tensors: net.params.iter().map(|p| Tensor::zeros(p.shape())).collect() }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.iter().all(Tensor::all_finite)
    }
}

/// Output shape of `spec` applied to an input of `shape`.
pub fn output_shape(spec: &LayerSpec, shape: &[usize]) -> Result<Vec<usize>> {
    let bad = || Error::ShapeMismatch(format!("{spec:?} cannot follow shape {shape:?}"));
    match (*spec, shape) {
        (LayerSpec::Conv2d { filters, kernel }, &[_, h, w]) if filters > 0 && kernel % 2 == 1 => {
            Ok(vec![filters, h, w])
        }
        (LayerSpec::MaxPool2x2, &[c, h, w]) if h >= 2 && w >= 2 => Ok(vec![c, h / 2, w / 2]),
        (LayerSpec::Relu, s) | (LayerSpec::Sigmoid, s) => Ok(s.to_vec()),
        (LayerSpec::Flatten, s) => Ok(vec![s.iter().product()]),
        (LayerSpec::Dense { units }, &[_]) if units > 0 => Ok(vec![units]),
        _ => Err(bad()),
    }
}

impl<T: Scalar> Network<T> {
    /// Builds the network and draws its initial parameters from `seed`.
    ///
    /// Weights are Kaiming-uniform, `U(-sqrt(6/fan_in), sqrt(6/fan_in))`; biases start at zero.
    pub fn new(input_shape: &[usize], specs: &[LayerSpec], seed: u64) -> Result<Self> {
        let mut shape = input_shape.to_vec();
        let mut params = Vec::new();
        let mut param_of = Vec::with_capacity(specs.len());
        let mut rng = generator(seed, 0);
        for spec in specs {
            let (w_shape, fan_in) = match (*spec, shape.as_slice()) {
                (LayerSpec::Conv2d { filters, kernel }, &[c, _, _]) => {
                    (vec![filters, c, kernel, kernel], c * kernel * kernel)
                }
                (LayerSpec::Dense { units }, &[n]) => (vec![units, n], n),
                _ => (Vec::new(), 0),
            };
            if w_shape.is_empty() {
                param_of.push(None);
            } else {
                let bound = (6.0 / fan_in as f64).sqrt();
                let n: usize = w_shape.iter().product();
                let w = (0..n).map(|_| T::from_f64(rng.gen_range(-bound..bound))).collect();
                param_of.push(Some(params.len()));
                params.push(Tensor::from_vec(&w_shape, w)?);
                params.push(Tensor::zeros(&[w_shape[0]]));
            }
            shape = output_shape(spec, &shape)?;
        }
        if shape != [1] {
            return Err(Error::ShapeMismatch(format!("network output {shape:?}, expected a scalar")));
        }
        Ok(Network { input_shape: input_shape.to_vec(), specs: specs.to_vec(), params, param_of })
    }

    /// Rebuilds a network around an existing parameter list (e.g. from a checkpoint).
    pub fn from_parts(input_shape: &[usize], specs: &[LayerSpec], params: Vec<Tensor<T>>) -> Result<Self> {
        let mut net = Network::new(input_shape, specs, 0)?;
        if params.len() != net.params.len() || params.iter().zip(&net.params).any(|(a, b)| a.shape() != b.shape()) {
            return Err(Error::ShapeMismatch("parameter list does not match the layer manifest".into()));
        }
        net.params = params;
        Ok(net)
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    pub fn params(&self) -> &[Tensor<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor<T>] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    /// Weight and bias of layer `i`, if it has parameters.
    pub fn layer_params(&self, i: usize) -> Option<(&Tensor<T>, &Tensor<T>)> {
        self.param_of[i].map(|j| (&self.params[j], &self.params[j + 1]))
    }

    pub fn cast<U: Scalar>(&self) -> Network<U> {
        Network {
            input_shape: self.input_shape.clone(),
            specs: self.specs.clone(),
            params: self.params.iter().map(Tensor::cast).collect(),
            param_of: self.param_of.clone(),
        }
    }

    /// Runs every layer, keeping what the backward pass needs. A trailing
    /// sigmoid is not applied; its input is returned as the logit.
    pub fn forward_trace(&self, x: &[T]) -> Result<Trace<T>> {
        let mut cur = Tensor::from_vec(&self.input_shape, x.to_vec())
            .map_err(|_| Error::ShapeMismatch(format!("input of {} values, network expects {:?}", x.len(), self.input_shape)))?;
        let last = self.specs.len() - usize::from(matches!(self.specs.last(), Some(LayerSpec::Sigmoid)));
        let mut inputs = Vec::with_capacity(last);
        let mut argmax = Vec::with_capacity(last);
        for (i, spec) in self.specs[..last].iter().enumerate() {
            let mut arg = None;
            let next = match *spec {
                LayerSpec::Conv2d { .. } => {
                    let (w, b) = self.layer_params(i).expect("conv parameters");
                    layers::conv2d_forward(&cur, w, b)?
                }
                LayerSpec::Dense { .. } => {
                    let (w, b) = self.layer_params(i).expect("dense parameters");
                    layers::dense(&cur, w, b)?
                }
                LayerSpec::Relu => layers::relu(&cur),
                LayerSpec::MaxPool2x2 => {
                    let (y, a) = layers::maxpool2x2(&cur)?;
                    arg = Some(a);
                    y
                }
                LayerSpec::Flatten => Tensor::from_vec(&[cur.len()], cur.data().to_vec())?,
                LayerSpec::Sigmoid => {
                    let d = cur.data().iter().map(|&v| layers::sigmoid(v)).collect();
                    Tensor::from_vec(cur.shape(), d)?
                }
            };
            if !next.all_finite() {
                return Err(Error::NonFiniteFault(format!("in output of layer {i} ({spec:?})")));
            }
            inputs.push(std::mem::replace(&mut cur, next));
            argmax.push(arg);
        }
        let logit = cur.data()[0];
        Ok(Trace { inputs, argmax, logit })
    }

    /// Prediction in (0, 1).
    pub fn predict(&self, x: &[T]) -> Result<T> {
        Ok(self.forward_trace(x)?.prediction())
    }

    /// Back-propagates `dlogit` (gradient at the pre-sigmoid output) and
    /// accumulates parameter gradients into `grads`.
    pub fn backward(&self, trace: &Trace<T>, dlogit: T, grads: &mut Gradients<T>) -> Result<()> {
        let mut dy = Tensor::from_vec(&[1], vec![dlogit])?;
        for i in (0..trace.inputs.len()).rev() {
            let x = &trace.inputs[i];
            let need_dx = i > 0;
            dy = match self.specs[i] {
                LayerSpec::Conv2d { .. } => {
                    let j = self.param_of[i].expect("conv parameters");
                    let g = layers::conv_geom(x.shape(), self.params[j].shape(), self.params[j + 1].shape())?;
                    let (gw, rest) = grads.tensors[j..].split_at_mut(1);
                    let mut dx = if need_dx { Tensor::zeros(x.shape()) } else { Tensor::zeros(&[0]) };
                    T::conv_backward(
                        &g,
                        x.data(),
                        self.params[j].data(),
                        dy.data(),
                        need_dx.then(|| dx.data_mut()),
                        gw[0].data_mut(),
                        rest[0].data_mut(),
                    );
                    dx
                }
                LayerSpec::Dense { .. } => {
                    let j = self.param_of[i].expect("dense parameters");
                    let (gw, rest) = grads.tensors[j..].split_at_mut(1);
                    for (g, &d) in rest[0].data_mut().iter_mut().zip(dy.data()) {
                        *g = *g + d;
                    }
                    let mut dx = Tensor::zeros(x.shape());
                    layers::dense_accumulate(
                        x.data(),
                        self.params[j].data(),
                        dy.data(),
                        need_dx.then(|| dx.data_mut()),
                        gw[0].data_mut(),
                    );
                    dx
                }
                LayerSpec::Relu => layers::relu_backward(x, &dy)?,
                LayerSpec::MaxPool2x2 => {
                    let arg = trace.argmax[i].as_ref().expect("pool indices");
                    layers::maxpool_backward(x.shape(), arg, &dy)?
                }
                LayerSpec::Flatten => Tensor::from_vec(x.shape(), dy.data().to_vec())?,
                LayerSpec::Sigmoid => {
                    let d = x
                        .data()
                        .iter()
                        .zip(dy.data())
                        .map(|(&v, &d)| {
                            let s = layers::sigmoid(v);
                            d * s * (T::one() - s)
                        })
                        .collect();
                    Tensor::from_vec(x.shape(), d)?
                }
            };
        }
        Ok(())
    }

    /// Mean binary cross-entropy and its parameter gradients over a batch.
    pub fn loss_and_gradients(&self, batch: &[&[T]], labels: &[T]) -> Result<(f64, Gradients<T>)> {
        if batch.len() != labels.len() || batch.is_empty() {
            return Err(Error::ShapeMismatch(format!("{} inputs for {} labels", batch.len(), labels.len())));
        }
        let scale = T::from_f64(1.0 / batch.len() as f64);
        let mut grads = Gradients::zeros_like(self);
        let mut loss = 0.0;
        for (x, &y) in batch.iter().zip(labels) {
            let trace = self.forward_trace(x)?;
            let p = trace.prediction();
            loss += layers::bce_loss(p, y).as_f64();
            // d/dz of bce(sigmoid(z), y)
            self.backward(&trace, (p - y) * scale, &mut grads)?;
        }
        Ok((loss / batch.len() as f64, grads))
    }

    /// One SGD step over `batch`; returns the mean loss before the update.
    pub fn train_step(&mut self, batch: &[&[T]], labels: &[T], opt: &mut OptimizerState<T>) -> Result<f64> {
        let (loss, grads) = self.loss_and_gradients(batch, labels)?;
        if !loss.is_finite() || !grads.all_finite() {
            return Err(Error::NonFiniteFault(format!("loss {loss}")));
        }
        sgd_step(&mut self.params, &grads.tensors, opt)?;
        Ok(loss)
    }
}

impl ConvGeom {
    /// Multiply-accumulates of one forward pass.
    pub fn macs(&self) -> usize {
        self.output_len() * self.channels * self.kernel * self.kernel
    }
}
