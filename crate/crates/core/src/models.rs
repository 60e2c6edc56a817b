//! The two detector topologies.
//!
//! Both are six same-padded convolutions in three (3x3, 5x5) pairs with 32,
//! 64 and 128 filters, a ReLU after each 3x3 convolution and a 2x2 max-pool
//! after each 5x5 one, then a 256-unit dense layer and a single sigmoid unit.
//! They differ only in the number of input planes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{NetKind, LEVELS};
use crate::nn::{LayerSpec, Network, Scalar};

/// Fixed gain between probability-normalized feature planes and the network
/// input. Raw probabilities (mean cell value 2^-16) leave a freshly
/// initialized network stuck at chance; 256 puts typical inputs near unit scale.
pub const INPUT_GAIN: f32 = 256.0;

/// Network input for a plane-major feature slice.
pub fn network_input(planes: &[f32]) -> Vec<f32> {
    planes.iter().map(|&v| v * INPUT_GAIN).collect()
}

/// Width of the hidden dense layer at full scale.
pub const DENSE_UNITS: usize = 256;
/// `(filters, kernel)` of the six convolutions at full scale.
pub const CONV_LAYERS: [(usize, usize); 6] = [(32, 3), (32, 5), (64, 3), (64, 5), (128, 3), (128, 5)];

/// Topology plus the seed its parameters are drawn from.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_planes: usize,
    pub layers: Vec<LayerSpec>,
    pub seed: u64,
}

fn build(input_planes: usize, seed: u64) -> NetworkSpec {
    let mut layers = Vec::with_capacity(16);
    for (i, &(filters, kernel)) in CONV_LAYERS.iter().enumerate() {
        layers.push(LayerSpec::Conv2d { filters, kernel });
        layers.push(if i % 2 == 0 { LayerSpec::Relu } else { LayerSpec::MaxPool2x2 });
    }
    layers.extend([
        LayerSpec::Flatten,
        LayerSpec::Dense { units: DENSE_UNITS },
        LayerSpec::Relu,
        LayerSpec::Dense { units: 1 },
        LayerSpec::Sigmoid,
    ]);
    NetworkSpec { input_planes, layers, seed }
}

/// Three-plane (intra-band only) detector.
pub fn build_conet(seed: u64) -> NetworkSpec {
    build(3, seed)
}

/// Six-plane (intra- and cross-band) detector.
pub fn build_crossconet(seed: u64) -> NetworkSpec {
    build(6, seed)
}

pub fn build_for(kind: NetKind, seed: u64) -> NetworkSpec {
    build(kind.planes(), seed)
}

/// Multiplies every filter count and the hidden dense width by `factor`
/// (floored, at least 1). The output unit and the topology are unchanged.
pub fn width_scale(spec: &NetworkSpec, factor: f64) -> Result<NetworkSpec> {
    if !(factor > 0.0 && factor <= 1.0) {
        return Err(Error::Config(format!("width factor {factor} outside (0, 1]")));
    }
    let scale = |n: usize| ((n as f64 * factor).floor() as usize).max(1);
    let last_dense = spec.layers.iter().rposition(|l| matches!(l, LayerSpec::Dense { .. }));
    let layers = spec
        .layers
        .iter()
        .enumerate()
        .map(|(i, l)| match *l {
            LayerSpec::Conv2d { filters, kernel } => LayerSpec::Conv2d { filters: scale(filters), kernel },
            LayerSpec::Dense { units } if Some(i) != last_dense => LayerSpec::Dense { units: scale(units) },
            other => other,
        })
        .collect();
    Ok(NetworkSpec { layers, ..spec.clone() })
}

impl NetworkSpec {
    pub fn conv_filters(&self) -> Vec<usize> {
        self.layers
            .iter()
            .filter_map(|l| match l {
                LayerSpec::Conv2d { filters, .. } => Some(*filters),
                _ => None,
            })
            .collect()
    }

    pub fn conv_kernels(&self) -> Vec<usize> {
        self.layers
            .iter()
            .filter_map(|l| match l {
                LayerSpec::Conv2d { kernel, .. } => Some(*kernel),
                _ => None,
            })
            .collect()
    }

    pub fn hidden_units(&self) -> Option<usize> {
        self.layers.iter().find_map(|l| match l {
            LayerSpec::Dense { units } => Some(*units),
            _ => None,
        })
    }

    /// Network on full 256x256 co-occurrence planes.
    pub fn instantiate<T: Scalar>(&self) -> Result<Network<T>> {
        self.instantiate_with_size(LEVELS)
    }

    /// Network on `side x side` input planes (reduced sizes are for testing).
    pub fn instantiate_with_size<T: Scalar>(&self, side: usize) -> Result<Network<T>> {
        Network::new(&[self.input_planes, side, side], &self.layers, self.seed)
    }
}
