//! Training on JPEG-compressed images and quality-factor sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::corpus::{FeatureSet, Sample};
use super::report::{Report, ReportRow};
use super::robustness::{condition_reports, NamedModel};
use super::source::ImageSource;
use super::synthetic::{Label, GAN, REAL};
use super::train::{train, TrainConfig, TrainOutcome};
use crate::attacks::{apply_indexed, pre_compression_rows, AttackSpec};
use crate::error::{Error, Result};
use crate::features::{assemble, Offset};
use crate::jpeg::{recompress, Chroma};

pub const TRAIN_QFS: [u8; 5] = [75, 80, 85, 90, 95];
/// Quality factors absent from [`TRAIN_QFS`].
pub const MISMATCHED_QFS: [u8; 6] = [73, 77, 83, 87, 93, 97];
/// Matched and mismatched factors in ascending order, one per table row.
pub const EVAL_QFS: [u8; 11] = [73, 75, 77, 80, 83, 85, 87, 90, 93, 95, 97];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JpegAwareConfig {
    pub train_qfs: Vec<u8>,
    /// Training images per class and quality factor, disjoint across
    /// factors. `None` divides each class evenly over the factors.
    pub per_qf: Option<usize>,
    pub eval_qfs: Vec<u8>,
    pub chroma: Chroma,
    /// Operators applied before compression in the robustness sweep.
    pub pre_attacks: Vec<AttackSpec>,
}

impl Default for JpegAwareConfig {
    fn default() -> Self {
        JpegAwareConfig {
            train_qfs: TRAIN_QFS.to_vec(),
            per_qf: None,
            eval_qfs: EVAL_QFS.to_vec(),
            chroma: Chroma::Full,
            pre_attacks: pre_compression_rows(),
        }
    }
}

impl JpegAwareConfig {
    pub fn validate(&self) -> Result<()> {
        if self.train_qfs.is_empty() || self.eval_qfs.is_empty() {
            return Err(Error::Config("quality factor lists must be nonempty".into()));
        }
        if let Some(q) = self.train_qfs.iter().chain(&self.eval_qfs).find(|q| !(1..=100).contains(*q)) {
            return Err(Error::Config(format!("quality factor {q} outside [1, 100]")));
        }
        if self.per_qf == Some(0) {
            return Err(Error::Config("per-QF count must be positive".into()));
        }
        for a in &self.pre_attacks {
            a.validate()?;
        }
        Ok(())
    }
}

/// Quality factor assigned to each source index; `None` leaves an image out.
/// Within each class, consecutive runs of images go to successive factors.
pub fn assign_qfs(labels: &[Label], qfs: &[u8], per_qf: Option<usize>) -> Result<Vec<Option<u8>>> {
    let mut out = vec![None; labels.len()];
    for class in [REAL, GAN] {
        let idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        let n = idx.len();
        let k = qfs.len();
        let quota: Vec<usize> = match per_qf {
            Some(c) if c * k > n => {
                return Err(Error::InfeasibleSplit(format!("{k} factors x {c} images exceed class size {n}")));
            }
            Some(c) => vec![c; k],
            None => (0..k).map(|j| n / k + usize::from(j < n % k)).collect(),
        };
        let mut it = idx.into_iter();
        for (&q, &c) in qfs.iter().zip(&quota) {
            for i in it.by_ref().take(c) {
                out[i] = Some(q);
            }
        }
    }
    Ok(out)
}

/// Compresses each selected image at its assigned factor and extracts
/// features for `config.net`.
pub fn compressed_features(
    source: &dyn ImageSource,
    qfs: &[Option<u8>],
    chroma: Chroma,
    config: &TrainConfig,
) -> Result<FeatureSet> {
    let picked: Vec<(usize, u8)> = qfs.iter().enumerate().filter_map(|(i, q)| q.map(|q| (i, q))).collect();
    let samples = picked
        .par_iter()
        .map(|&(i, q)| {
            let img = recompress(&source.image(i)?, q, chroma)?;
            Ok(Sample {
                name: format!("{i}@{q}"),
                label: source.label(i),
                features: assemble(&img, config.net, config.tau, config.tau_prime)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    FeatureSet::new(samples)
}

/// Trains on the union over training factors of compressed images. The
/// validation images, if any, cycle through the training factors.
pub fn jpeg_aware_train(
    train_source: &dyn ImageSource,
    val_source: Option<&dyn ImageSource>,
    jpeg: &JpegAwareConfig,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    jpeg.validate()?;
    let qfs = assign_qfs(&train_source.labels(), &jpeg.train_qfs, jpeg.per_qf)?;
    let set = compressed_features(train_source, &qfs, jpeg.chroma, config)?;
    let val = match val_source {
        Some(v) => {
            let cyc: Vec<Option<u8>> = (0..v.len()).map(|i| Some(jpeg.train_qfs[i % jpeg.train_qfs.len()])).collect();
            Some(compressed_features(v, &cyc, jpeg.chroma, config)?)
        }
        None => None,
    };
    train(&set, val.as_ref(), config)
}

/// Accuracy at every evaluation factor: operation `JPEG compression`,
/// parameter = the factor, rows in factor order then model order.
pub fn qf_sweep(
    models: &[NamedModel],
    source: &dyn ImageSource,
    jpeg: &JpegAwareConfig,
    tau: Offset,
    tau_prime: Offset,
    dataset: &str,
) -> Result<Report> {
    jpeg.validate()?;
    let mut rows = Vec::new();
    for &q in &jpeg.eval_qfs {
        let compress = AttackSpec::JpegCompress { quality: q };
        let reports = condition_reports(models, source, tau, tau_prime, |_, img| recompress(&img, q, jpeg.chroma))?;
        for (m, r) in models.iter().zip(reports) {
            rows.push(ReportRow {
                operation: compress.operation().into(),
                parameter: compress.parameter(),
                dataset: dataset.into(),
                network: m.name.clone(),
                accuracy: r.accuracy,
            });
        }
    }
    Ok(Report::new(rows))
}

/// Operator label of a processed-then-compressed row.
pub fn compressed_operation(attack: &AttackSpec) -> String {
    format!("{} + JPEG compression", attack.operation())
}

/// Parameter label of a processed-then-compressed row.
pub fn compressed_parameter(attack: &AttackSpec, qf: u8) -> String {
    format!("{}; QF {qf}", attack.parameter())
}

/// Each pre-compression operator followed by compression at each
/// evaluation factor. Rows are factor-major: for each factor, every
/// operator in configuration order, then every model.
pub fn pre_compression_sweep(
    models: &[NamedModel],
    source: &dyn ImageSource,
    jpeg: &JpegAwareConfig,
    tau: Offset,
    tau_prime: Offset,
    dataset: &str,
) -> Result<Report> {
    jpeg.validate()?;
    let mut rows = Vec::new();
    for &q in &jpeg.eval_qfs {
        for attack in &jpeg.pre_attacks {
            let reports = condition_reports(models, source, tau, tau_prime, |i, img| {
                recompress(&apply_indexed(attack, &img, i as u64)?, q, jpeg.chroma)
            })?;
            for (m, r) in models.iter().zip(reports) {
                rows.push(ReportRow {
                    operation: compressed_operation(attack),
                    parameter: compressed_parameter(attack, q),
                    dataset: dataset.into(),
                    network: m.name.clone(),
                    accuracy: r.accuracy,
                });
            }
        }
    }
    Ok(Report::new(rows))
}
