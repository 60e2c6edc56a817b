//! Dataset manifests and stratified splits.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::synthetic::{Label, GAN, REAL};
use crate::error::{Error, Result};
use crate::raster::ImageFormat;
use crate::rng::{generator, shuffle};

/// Class directory names, indexed by label.
pub const CLASS_DIRS: [&str; 2] = ["real", "gan"];

pub fn class_name(label: Label) -> &'static str {
    CLASS_DIRS[label as usize]
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub path: PathBuf,
    pub label: Label,
}

/// Labeled image list with no duplicate paths.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub entries: Vec<Entry>,
}

impl DatasetManifest {
    pub fn new(entries: Vec<Entry>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for e in &entries {
            if !seen.insert(&e.path) {
                return Err(Error::Config(format!("duplicate manifest path {}", e.path.display())));
            }
        }
        Ok(DatasetManifest { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of entries per label.
    pub fn counts(&self) -> BTreeMap<Label, usize> {
        let mut m = BTreeMap::new();
        for e in &self.entries {
            *m.entry(e.label).or_insert(0) += 1;
        }
        m
    }

    fn of_label(&self, label: Label) -> Vec<Entry> {
        self.entries.iter().filter(|e| e.label == label).cloned().collect()
    }
}

/// Scans `root/real` and `root/gan` for PNG/PPM files, sorted by file name.
pub fn ingest(root: impl AsRef<Path>) -> Result<DatasetManifest> {
    let root = root.as_ref();
    let mut entries = Vec::new();
    for (label, dir) in [(REAL, CLASS_DIRS[0]), (GAN, CLASS_DIRS[1])] {
        let d = root.join(dir);
        if !d.is_dir() {
            return Err(Error::MissingClassDir(dir.into()));
        }
        let mut files: Vec<PathBuf> = std::fs::read_dir(&d)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && ImageFormat::from_path(p).is_some())
            .collect();
        if files.is_empty() {
            return Err(Error::EmptyClass(dir.into()));
        }
        files.sort();
        entries.extend(files.into_iter().map(|path| Entry { path, label }));
    }
    DatasetManifest::new(entries)
}

/// Per-class split sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SplitSizes {
    /// Fractions of each class; must sum to 1. Test takes the remainder after rounding.
    Fractions { train: f64, val: f64, test: f64 },
    /// Exact counts per class; items beyond their sum are left out.
    CountsPerClass { train: usize, val: usize, test: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub sizes: SplitSizes,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: DatasetManifest,
    pub val: DatasetManifest,
    pub test: DatasetManifest,
}

fn class_sizes(n: usize, sizes: &SplitSizes) -> Result<(usize, usize, usize)> {
    match *sizes {
        SplitSizes::Fractions { train, val, test } => {
            if [train, val, test].iter().any(|f| !(0.0..=1.0).contains(f)) || (train + val + test - 1.0).abs() > 1e-9 {
                return Err(Error::InfeasibleSplit(format!("fractions {train}/{val}/{test} do not sum to 1")));
            }
            let tr = (n as f64 * train).round() as usize;
            let va = (n as f64 * val).round() as usize;
            if tr + va > n {
                return Err(Error::InfeasibleSplit(format!("{tr} + {va} items exceed class size {n}")));
            }
            Ok((tr, va, n - tr - va))
        }
        SplitSizes::CountsPerClass { train, val, test } => {
            if train + val + test > n {
                return Err(Error::InfeasibleSplit(format!("{train}+{val}+{test} items requested from a class of {n}")));
            }
            Ok((train, val, test))
        }
    }
}

/// Stratified, seeded split. Each class is shuffled on its own stream.
pub fn split(manifest: &DatasetManifest, spec: &SplitSpec) -> Result<Split> {
    let (mut train, mut val, mut test) = (vec![], vec![], vec![]);
    for label in [REAL, GAN] {
        let mut items = manifest.of_label(label);
        if items.is_empty() {
            return Err(Error::InfeasibleSplit(format!("no {} images", class_name(label))));
        }
        let (tr, va, te) = class_sizes(items.len(), &spec.sizes)?;
        shuffle(&mut items, &mut generator(spec.seed, label as u64));
        let mut it = items.into_iter();
        train.extend(it.by_ref().take(tr));
        val.extend(it.by_ref().take(va));
        test.extend(it.by_ref().take(te));
    }
    Ok(Split {
        train: DatasetManifest { entries: train },
        val: DatasetManifest { entries: val },
        test: DatasetManifest { entries: test },
    })
}
