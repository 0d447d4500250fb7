//! `foldwise`: the evaluation and explainability half of a k-fold image
//! classification pipeline.
//!
//! Models are trained elsewhere. Everything here consumes their outputs
//! (per-fold probability tables, exported activation/gradient tensors, or a
//! black-box predictor command) and produces splits, ensembles, metrics and
//! saliency maps.

pub mod cli;
pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod io;
pub mod metrics;
pub mod predictions;
pub mod rng;
pub mod xai;

pub use dataset::{
    ClassVocabulary, DatasetIndex, FoldPlan, SampleRecord, SplitAssignment, SplitSet,
};
pub use error::{Error, Result};
pub use predictions::PredictionMatrix;
