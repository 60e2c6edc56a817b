//! Labeled image collections, read on demand.

use super::dataset::DatasetManifest;
use super::synthetic::Label;
use crate::error::{Error, Result};
use crate::raster::{load_image, RgbImage};

/// Random-access labeled images. Sweeps decode images one at a time, so a
/// file-backed source never holds the whole test set in memory.
pub trait ImageSource: Sync {
    fn len(&self) -> usize;
    fn label(&self, index: usize) -> Label;
    fn image(&self, index: usize) -> Result<RgbImage>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn labels(&self) -> Vec<Label> {
        (0..self.len()).map(|i| self.label(i)).collect()
    }
}

impl ImageSource for DatasetManifest {
    fn len(&self) -> usize {
        self.entries.len()
    }

    fn label(&self, index: usize) -> Label {
        self.entries[index].label
    }

    fn image(&self, index: usize) -> Result<RgbImage> {
        load_image(&self.entries[index].path)
    }
}

/// Images already decoded.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InMemory {
    images: Vec<RgbImage>,
    labels: Vec<Label>,
}

impl InMemory {
    pub fn new(images: Vec<RgbImage>, labels: Vec<Label>) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::Config(format!("{} images but {} labels", images.len(), labels.len())));
        }
        Ok(InMemory { images, labels })
    }

    pub fn images(&self) -> &[RgbImage] {
        &self.images
    }
}

impl ImageSource for InMemory {
    fn len(&self) -> usize {
        self.images.len()
    }

    fn label(&self, index: usize) -> Label {
        self.labels[index]
    }

    fn image(&self, index: usize) -> Result<RgbImage> {
        Ok(self.images[index].clone())
    }
}
