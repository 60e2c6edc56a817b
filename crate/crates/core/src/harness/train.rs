//! Mini-batch SGD training over an in-memory feature set.

use std::ops::ControlFlow;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::corpus::FeatureSet;
use super::eval::evaluate;
use crate::error::{Error, Result};
use crate::features::{NetKind, Offset};
use crate::models::{build_for, network_input, width_scale, NetworkSpec, INPUT_GAIN};
use crate::nn::{checkpoint, Network, OptimizerState};
use crate::rng::{generator, shuffle, GENERATOR_NAME};

/// Stream ids at and above this value drive the per-epoch shuffles.
const SHUFFLE_STREAM: u64 = 1 << 40;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub tau: Offset,
    pub tau_prime: Offset,
    pub net: NetKind,
    pub width_factor: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            momentum: 0.9,
            batch_size: 40,
            epochs: 40,
            tau: Offset::default(),
            tau_prime: Offset::default(),
            net: NetKind::Crossconet,
            width_factor: 1.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, train_len: usize) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum {} outside [0, 1)", self.momentum));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return bad("batch size and epochs must be positive".into());
        }
        if self.batch_size > train_len {
            return bad(format!("batch size {} exceeds training set of {train_len}", self.batch_size));
        }
        width_scale(&build_for(self.net, self.seed), self.width_factor).map(|_| ())
    }

    pub fn network_spec(&self) -> Result<NetworkSpec> {
        width_scale(&build_for(self.net, self.seed), self.width_factor)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub mean_loss: f64,
    pub val_accuracy: Option<f64>,
}

pub struct TrainOutcome {
    pub spec: NetworkSpec,
    pub model: Network<f32>,
    /// Snapshot with the highest validation accuracy (earliest on ties).
    pub best: Option<(usize, Network<f32>)>,
    pub log: Vec<EpochLog>,
}

/// Trains a freshly initialized network. Each epoch visits the training set
/// in a seeded random order; the final partial batch is kept.
pub fn train(set: &FeatureSet, val: Option<&FeatureSet>, config: &TrainConfig) -> Result<TrainOutcome> {
    train_with(set, val, config, |_| ControlFlow::Continue(()))
}

/// [`train`] with a callback after every epoch. Returning `Break` ends
/// training after that epoch.
pub fn train_with(
    set: &FeatureSet,
    val: Option<&FeatureSet>,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog) -> ControlFlow<()>,
) -> Result<TrainOutcome> {
    config.validate(set.len())?;
    let labels = set.labels();
    if !labels.contains(&0) || !labels.contains(&1) {
        return Err(Error::Config("training needs both classes".into()));
    }
    let spec = config.network_spec()?;
    let inputs = set.inputs(spec.input_planes)?;
    let side = (inputs[0].len() / spec.input_planes).isqrt();
    let mut model: Network<f32> = spec.instantiate_with_size(side)?;
    let mut opt = OptimizerState::new(&model, config.learning_rate, config.momentum);
    let mut order: Vec<usize> = (0..set.len()).collect();
    let mut log = Vec::with_capacity(config.epochs);
    let mut best: Option<(usize, f64, Network<f32>)> = None;
    for epoch in 0..config.epochs {
        shuffle(&mut order, &mut generator(config.seed, SHUFFLE_STREAM + epoch as u64));
        let mut total = 0.0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let xs: Vec<Vec<f32>> = chunk.iter().map(|&i| network_input(inputs[i])).collect();
            let refs: Vec<&[f32]> = xs.iter().map(Vec::as_slice).collect();
            let ys: Vec<f32> = chunk.iter().map(|&i| labels[i] as f32).collect();
            let loss = model.train_step(&refs, &ys, &mut opt).map_err(|e| match e {
                Error::NonFiniteFault(m) => Error::NonFiniteFault(format!("{m} (epoch {epoch}, batch {b})")),
                other => other,
            })?;
            total += loss * chunk.len() as f64;
        }
        let val_accuracy = match val {
            Some(v) if !v.is_empty() => Some(evaluate(&model, v)?.accuracy),
            _ => None,
        };
        if let Some(acc) = val_accuracy {
            if best.as_ref().map_or(true, |(_, b, _)| acc > *b) {
                best = Some((epoch, acc, model.clone()));
            }
        }
        let entry = EpochLog { epoch, mean_loss: total / set.len() as f64, val_accuracy };
        log::info!("epoch {epoch}: loss {:.5} val {:?}", entry.mean_loss, entry.val_accuracy);
        let flow = on_epoch(&entry);
        log.push(entry);
        if flow.is_break() {
            break;
        }
    }
    Ok(TrainOutcome { spec, model, best: best.map(|(e, _, m)| (e, m)), log })
}

/// Provenance written next to every checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub generator: String,
    pub normalization: String,
    pub input_gain: f32,
    pub config: TrainConfig,
    pub spec: NetworkSpec,
    pub train_size: usize,
    pub log: Vec<EpochLog>,
}

impl Provenance {
    pub fn new(config: &TrainConfig, outcome: &TrainOutcome, train_size: usize) -> Self {
        Provenance {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            generator: GENERATOR_NAME.into(),
            normalization: NORMALIZATION.into(),
            input_gain: INPUT_GAIN,
            config: config.clone(),
            spec: outcome.spec.clone(),
            train_size,
            log: outcome.log.clone(),
        }
    }
}

/// How feature planes are scaled before the network sees them.
pub const NORMALIZATION: &str = "probability (each plane sums to 1), times input gain";

/// Path of the JSON sidecar for a checkpoint path.
pub fn sidecar_path(checkpoint: &Path) -> std::path::PathBuf {
    let mut s = checkpoint.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

/// Writes the final model to `path`, the best-validation model (if any) to
/// `path` with a `.best` suffix, and provenance sidecars for both.
pub fn save_outcome(outcome: &TrainOutcome, provenance: &Provenance, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    checkpoint::save(&outcome.model, path)?;
    checkpoint::save_sidecar(provenance, sidecar_path(path))?;
    if let Some((_, best)) = &outcome.best {
        let mut p = path.as_os_str().to_owned();
        p.push(".best");
        let p = std::path::PathBuf::from(p);
        checkpoint::save(best, &p)?;
        checkpoint::save_sidecar(provenance, sidecar_path(&p))?;
    }
    Ok(())
}
