//! Accuracy of trained detectors on post-processed test images.

use rayon::prelude::*;

use super::eval::EvalReport;
use super::report::{Report, ReportRow};
use super::source::ImageSource;
use crate::attacks::{apply_indexed, AttackSpec};
use crate::error::Result;
use crate::features::{assemble, NetKind, Offset};
use crate::models::network_input;
use crate::nn::Network;
use crate::raster::RgbImage;

/// A trained detector and the name it gets in reports.
pub struct NamedModel<'a> {
    pub name: String,
    pub model: &'a Network<f32>,
}

impl<'a> NamedModel<'a> {
    pub fn new(name: impl Into<String>, model: &'a Network<f32>) -> Self {
        NamedModel { name: name.into(), model }
    }
}

/// Feature layout covering every model: 6 planes if any model needs them.
fn extraction_kind(models: &[NamedModel]) -> NetKind {
    if models.iter().any(|m| m.model.input_shape()[0] > 3) {
        NetKind::Crossconet
    } else {
        NetKind::Conet
    }
}

/// Evaluates every model on `transform(i, image_i)` for each source image.
/// Images are processed in parallel and dropped right after prediction.
pub fn condition_reports(
    models: &[NamedModel],
    source: &dyn ImageSource,
    tau: Offset,
    tau_prime: Offset,
    transform: impl Fn(usize, RgbImage) -> Result<RgbImage> + Sync,
) -> Result<Vec<EvalReport>> {
    let kind = extraction_kind(models);
    let preds: Vec<Vec<f32>> = (0..source.len())
        .into_par_iter()
        .map(|i| {
            let img = transform(i, source.image(i)?)?;
            let t = assemble(&img, kind, tau, tau_prime)?;
            models
                .iter()
                .map(|m| {
                    let n = t.plane(0).len() * m.model.input_shape()[0];
                    m.model.predict(&network_input(&t.data()[..n]))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let labels = source.labels();
    Ok((0..models.len())
        .map(|k| {
            let p: Vec<f32> = preds.iter().map(|v| v[k]).collect();
            EvalReport::from_predictions(&p, &labels)
        })
        .collect())
}

/// One row per (attack, model), in attack order then model order. Any
/// attack or feature error aborts the sweep.
pub fn robustness_eval(
    models: &[NamedModel],
    source: &dyn ImageSource,
    attacks: &[AttackSpec],
    tau: Offset,
    tau_prime: Offset,
    dataset: &str,
) -> Result<Report> {
    for a in attacks {
        a.validate()?;
    }
    let mut rows = Vec::with_capacity(attacks.len() * models.len());
    for attack in attacks {
        log::info!("robustness: {attack}");
        let reports =
            condition_reports(models, source, tau, tau_prime, |i, img| apply_indexed(attack, &img, i as u64))?;
        for (m, r) in models.iter().zip(reports) {
            rows.push(ReportRow {
                operation: attack.operation().into(),
                parameter: attack.parameter(),
                dataset: dataset.into(),
                network: m.name.clone(),
                accuracy: r.accuracy,
            });
        }
    }
    Ok(Report::new(rows))
}

/// Unattacked accuracy of each model on the source images.
pub fn clean_eval(models: &[NamedModel], source: &dyn ImageSource, tau: Offset, tau_prime: Offset) -> Result<Vec<EvalReport>> {
    condition_reports(models, source, tau, tau_prime, |_, img| Ok(img))
}
