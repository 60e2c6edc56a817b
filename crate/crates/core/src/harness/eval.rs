//! Accuracy at the 0.5 threshold, with per-class recall.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::corpus::FeatureSet;
use super::synthetic::{Label, GAN, REAL};
use crate::error::Result;
use crate::models::network_input;
use crate::nn::Network;

/// Predictions at or above this value are labeled GAN.
pub const THRESHOLD: f32 = 0.5;

pub fn classify(prediction: f32) -> Label {
    if prediction >= THRESHOLD {
        GAN
    } else {
        REAL
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub total: usize,
    pub correct: usize,
    /// `correct / total`, in [0, 1].
    pub accuracy: f64,
    /// `confusion[actual][predicted]`, 0 = real, 1 = gan.
    pub confusion: [[usize; 2]; 2],
    /// Fraction of real images labeled real; `None` without real images.
    pub recall_real: Option<f64>,
    pub recall_gan: Option<f64>,
}

impl EvalReport {
    pub fn from_predictions(predictions: &[f32], labels: &[Label]) -> Self {
        let mut confusion = [[0usize; 2]; 2];
        for (&p, &y) in predictions.iter().zip(labels) {
            confusion[y as usize][classify(p) as usize] += 1;
        }
        let total = predictions.len().min(labels.len());
        let correct = confusion[0][0] + confusion[1][1];
        let recall = |k: usize| {
            let n = confusion[k][0] + confusion[k][1];
            (n > 0).then(|| confusion[k][k] as f64 / n as f64)
        };
        EvalReport {
            total,
            correct,
            accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
            confusion,
            recall_real: recall(0),
            recall_gan: recall(1),
        }
    }
}

fn model_planes(model: &Network<f32>) -> usize {
    model.input_shape()[0]
}

/// Model outputs for raw plane-major feature slices, in input order.
pub fn predict_inputs(model: &Network<f32>, inputs: &[&[f32]]) -> Result<Vec<f32>> {
    inputs.par_iter().map(|x| model.predict(&network_input(x))).collect()
}

pub fn predictions(model: &Network<f32>, set: &FeatureSet) -> Result<Vec<f32>> {
    predict_inputs(model, &set.inputs(model_planes(model))?)
}

pub fn evaluate(model: &Network<f32>, set: &FeatureSet) -> Result<EvalReport> {
    Ok(EvalReport::from_predictions(&predictions(model, set)?, &set.labels()))
}
