//! Experiment plumbing: datasets, corpora, training, evaluation and reports.

pub mod corpus;
pub mod dataset;
pub mod eval;
pub mod jpeg_aware;
pub mod report;
pub mod robustness;
pub mod source;
pub mod synthetic;
pub mod train;

pub use corpus::{extract_corpus, extract_features, load_corpus, read_corpus_meta, CorpusMeta, FeatureSet, Sample};
pub use dataset::{ingest, split, DatasetManifest, Entry, Split, SplitSizes, SplitSpec};
pub use eval::{evaluate, EvalReport};
pub use jpeg_aware::{jpeg_aware_train, JpegAwareConfig};
pub use report::{emit_report, Report, ReportFormat, ReportRow};
pub use robustness::{robustness_eval, NamedModel};
pub use source::{ImageSource, InMemory};
pub use synthetic::{Label, GAN, REAL};
pub use train::{train, TrainConfig, TrainOutcome};
