//! Central-difference gradient checks.
//!
//! Network-level checks compare only parameters whose +-h step keeps every
//! ReLU sign and pooling winner; the rest straddle a kink at h = 1e-3 and are
//! compared at h = 1e-6.

use crossco::nn::{LayerSpec, Network};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const H: f64 = 1e-3;
pub const TOL: f64 = 1e-4;

pub fn rel_err(a: f64, n: f64) -> f64 {
    let d = (a - n).abs();
    if d == 0.0 {
        0.0
    } else {
        d / a.abs().max(n.abs())
    }
}

/// Piecewise-linear regime of a forward pass: the sign of every ReLU
/// input and the winner of every pooling window, for each batch item.
pub fn regime(net: &Network<f64>, batch: &[&[f64]]) -> Vec<Vec<bool>> {
    batch
        .iter()
        .map(|x| {
            let t = net.forward_trace(x).unwrap();
            let mut r = Vec::new();
            for (spec, input) in net.specs().iter().zip(t.layer_inputs()) {
                if *spec == LayerSpec::Relu {
                    r.extend(input.data().iter().map(|&v| v > 0.0));
                }
            }
            for choice in t.pool_choices() {
                r.extend(choice.iter().flat_map(|&i| (0..usize::BITS).map(move |b| i >> b & 1 == 1)));
            }
            r
        })
        .collect()
}

pub struct NetCheck {
    pub worst: f64,
    pub checked: usize,
    /// Parameters whose +-h step changes the regime; central differences
    /// straddle a kink there and are not a gradient estimate. These are
    /// checked at [`H_KINK`] instead.
    pub straddled: usize,
    pub worst_straddled: f64,
}

/// Step for parameters whose `H` step crosses a kink.
const H_KINK: f64 = 1e-6;

pub fn check_network(mut net: Network<f64>, inputs: &[Vec<f64>], labels: &[f64]) -> NetCheck {
    let batch: Vec<&[f64]> = inputs.iter().map(Vec::as_slice).collect();
    let (_, grads) = net.loss_and_gradients(&batch, labels).unwrap();
    let base = regime(&net, &batch);
    let mut out = NetCheck { worst: 0.0, checked: 0, straddled: 0, worst_straddled: 0.0 };
    for t in 0..net.params().len() {
        for i in 0..net.params()[t].len() {
            let orig = net.params()[t].data()[i];
            net.params_mut()[t].data_mut()[i] = orig + H;
            let (lp, _) = net.loss_and_gradients(&batch, labels).unwrap();
            let same_p = regime(&net, &batch) == base;
            net.params_mut()[t].data_mut()[i] = orig - H;
            let (lm, _) = net.loss_and_gradients(&batch, labels).unwrap();
            let same_m = regime(&net, &batch) == base;
            net.params_mut()[t].data_mut()[i] = orig;
            if !(same_p && same_m) {
                net.params_mut()[t].data_mut()[i] = orig + H_KINK;
                let (lp, _) = net.loss_and_gradients(&batch, labels).unwrap();
                net.params_mut()[t].data_mut()[i] = orig - H_KINK;
                let (lm, _) = net.loss_and_gradients(&batch, labels).unwrap();
                net.params_mut()[t].data_mut()[i] = orig;
                let num = (lp - lm) / (2.0 * H_KINK);
                out.worst_straddled = out.worst_straddled.max(rel_err(grads.tensors[t].data()[i], num));
                out.straddled += 1;
                continue;
            }
            let num = (lp - lm) / (2.0 * H);
            out.worst = out.worst.max(rel_err(grads.tensors[t].data()[i], num));
            out.checked += 1;
        }
    }
    out
}

impl NetCheck {
    /// Error message when any tolerance is exceeded.
    pub fn verdict(&self) -> Result<(), String> {
        let total = self.checked + self.straddled;
        if self.worst >= TOL {
            return Err(format!("max relative error {:e}", self.worst));
        }
        if self.worst_straddled >= TOL {
            return Err(format!("max relative error {:e} at kinks", self.worst_straddled));
        }
        // most parameters must be checked at the nominal step
        if self.straddled * 4 > total {
            return Err(format!("{} of {total} parameters straddle a kink", self.straddled));
        }
        Ok(())
    }
}

pub fn assert_passes(c: &NetCheck, what: &str) {
    if let Err(e) = c.verdict() {
        panic!("{what}: {e}");
    }
}

pub fn randomize_biases(net: &mut Network<f64>, rng: &mut ChaCha8Rng) {
    for t in net.params_mut().iter_mut().filter(|t| t.shape().len() == 1) {
        for v in t.data_mut() {
            *v = rng.gen_range(-0.1..0.1);
        }
    }
}

pub fn batch(rng: &mut ChaCha8Rng, shape: &[usize], n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let len: usize = shape.iter().product();
    let xs = (0..n).map(|_| (0..len).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
    let ys = (0..n).map(|i| (i % 2) as f64).collect();
    (xs, ys)
}

