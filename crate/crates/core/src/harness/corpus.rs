//! Feature corpora: per-image co-occurrence tensors on disk or in memory.
//!
//! On disk a corpus is `out/<class>/<stem>.cbco` plus `out/index.tsv` with
//! one `relative-path<TAB>label` line per file, in manifest order.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{class_name, DatasetManifest};
use super::synthetic::Label;
use crate::error::{Error, Result};
use crate::features::{assemble, read_feature_file, write_feature_file, FeatureTensor, NetKind, Offset};
use crate::raster::{load_image, RgbImage};

pub const INDEX_FILE: &str = "index.tsv";
pub const FAILURE_FILE: &str = "failures.tsv";
pub const META_FILE: &str = "corpus.json";

/// Extraction settings stored with a corpus.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusMeta {
    pub net: NetKind,
    pub tau: Offset,
    pub tau_prime: Offset,
}

/// Settings of a corpus written by [`extract_corpus`]; `None` if absent.
pub fn read_corpus_meta(dir: impl AsRef<Path>) -> Result<Option<CorpusMeta>> {
    let path = dir.as_ref().join(META_FILE);
    match std::fs::read_to_string(&path) {
        Ok(text) => serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display()))),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// One labeled feature tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub name: String,
    pub label: Label,
    pub features: FeatureTensor,
}

/// Samples sharing one plane count.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeatureSet {
    planes: usize,
    samples: Vec<Sample>,
}

impl FeatureSet {
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        let planes = samples.first().map_or(0, |s| s.features.plane_count());
        if let Some(s) = samples.iter().find(|s| s.features.plane_count() != planes) {
            return Err(Error::ChannelCountMismatch { expected: planes, found: s.features.plane_count() });
        }
        Ok(FeatureSet { planes, samples })
    }

    pub fn planes(&self) -> usize {
        self.planes
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn labels(&self) -> Vec<Label> {
        self.samples.iter().map(|s| s.label).collect()
    }

    /// Plane-major input slices for a model reading `planes` planes. A
    /// 3-plane model may read a 6-plane set: the intra-band planes come first.
    pub fn inputs(&self, planes: usize) -> Result<Vec<&[f32]>> {
        if self.is_empty() {
            return Ok(vec![]);
        }
        if !(planes == self.planes || (planes == 3 && self.planes == 6)) {
            return Err(Error::PlaneCountMismatch { model: planes, corpus: self.planes });
        }
        let n = self.samples[0].features.plane(0).len() * planes;
        Ok(self.samples.iter().map(|s| &s.features.data()[..n]).collect())
    }
}

/// Features of many images, extracted in parallel, in input order.
pub fn extract_images(images: &[RgbImage], kind: NetKind, tau: Offset, tau_prime: Offset) -> Result<Vec<FeatureTensor>> {
    images.par_iter().map(|img| assemble(img, kind, tau, tau_prime)).collect()
}

fn load_and_assemble(path: &Path, kind: NetKind, tau: Offset, tau_prime: Offset) -> Result<FeatureTensor> {
    assemble(&load_image(path)?, kind, tau, tau_prime)
}

fn sample_name(path: &Path, label: Label) -> String {
    let stem = path.file_stem().map_or_else(|| "unnamed".into(), |s| s.to_string_lossy().into_owned());
    format!("{}/{stem}", class_name(label))
}

/// Items that could not be processed, with the reason.
pub type Failures = Vec<(PathBuf, String)>;

/// Loads and featurizes every manifest entry in memory, skipping failures.
pub fn extract_features(
    manifest: &DatasetManifest,
    kind: NetKind,
    tau: Offset,
    tau_prime: Offset,
) -> Result<(FeatureSet, Failures)> {
    let results: Vec<_> =
        manifest.entries.par_iter().map(|e| load_and_assemble(&e.path, kind, tau, tau_prime)).collect();
    let mut samples = Vec::new();
    let mut failures = Vec::new();
    for (e, r) in manifest.entries.iter().zip(results) {
        match r {
            Ok(features) => samples.push(Sample { name: sample_name(&e.path, e.label), label: e.label, features }),
            Err(err) => failures.push((e.path.clone(), err.to_string())),
        }
    }
    Ok((FeatureSet::new(samples)?, failures))
}

/// Result of writing a corpus to disk.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CorpusSummary {
    /// Relative path and label of every written file, in manifest order.
    pub written: Vec<(String, Label)>,
    pub failures: Failures,
}

/// Writes one `.cbco` file per image and the index; bad images are recorded
/// in the summary (and `failures.tsv`) without aborting the run.
pub fn extract_corpus(
    manifest: &DatasetManifest,
    tau: Offset,
    tau_prime: Offset,
    kind: NetKind,
    out_dir: impl AsRef<Path>,
) -> Result<CorpusSummary> {
    let out = out_dir.as_ref();
    for label in [0, 1] {
        std::fs::create_dir_all(out.join(class_name(label)))?;
    }
    let mut seen = HashSet::new();
    let rel: Vec<Option<String>> = manifest
        .entries
        .iter()
        .map(|e| {
            let name = format!("{}.cbco", sample_name(&e.path, e.label));
            seen.insert(name.clone()).then_some(name)
        })
        .collect();
    let results: Vec<Result<()>> = manifest
        .entries
        .par_iter()
        .zip(&rel)
        .map(|(e, name)| {
            let name = name.as_ref().ok_or_else(|| Error::Config("output name collides with an earlier image".into()))?;
            let t = load_and_assemble(&e.path, kind, tau, tau_prime)?;
            write_feature_file(&t, out.join(name))
        })
        .collect();
    let mut summary = CorpusSummary::default();
    for ((e, name), r) in manifest.entries.iter().zip(rel).zip(results) {
        match (name, r) {
            (Some(name), Ok(())) => summary.written.push((name, e.label)),
            (_, Err(err)) => summary.failures.push((e.path.clone(), err.to_string())),
            (None, Ok(())) => unreachable!("collisions always fail"),
        }
    }
    let index: String = summary.written.iter().map(|(p, l)| format!("{p}\t{l}\n")).collect();
    std::fs::write(out.join(INDEX_FILE), index)?;
    let meta = CorpusMeta { net: kind, tau, tau_prime };
    let meta = serde_json::to_string_pretty(&meta).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(out.join(META_FILE), meta + "\n")?;
    let failure_path = out.join(FAILURE_FILE);
    if summary.failures.is_empty() {
        if failure_path.exists() {
            std::fs::remove_file(failure_path)?;
        }
    } else {
        let text: String = summary.failures.iter().map(|(p, e)| format!("{}\t{e}\n", p.display())).collect();
        std::fs::write(failure_path, text)?;
    }
    Ok(summary)
}

/// Reads a corpus written by [`extract_corpus`].
pub fn load_corpus(dir: impl AsRef<Path>) -> Result<FeatureSet> {
    let dir = dir.as_ref();
    let index_path = dir.join(INDEX_FILE);
    let text = std::fs::read_to_string(&index_path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(index_path.clone()),
        _ => Error::Io(e),
    })?;
    let mut samples = Vec::new();
    for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let (rel, label) =
            line.split_once('\t').ok_or_else(|| Error::Config(format!("index line {}: expected path<TAB>label", n + 1)))?;
        let label: Label = match label.trim() {
            "0" => 0,
            "1" => 1,
            other => return Err(Error::Config(format!("index line {}: label {other:?}", n + 1))),
        };
        let features = read_feature_file(dir.join(rel))?;
        samples.push(Sample { name: rel.trim_end_matches(".cbco").to_string(), label, features });
    }
    FeatureSet::new(samples)
}
