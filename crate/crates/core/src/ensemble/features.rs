use crate::dataset::ClassVocabulary;
use crate::error::{Error, Result};
use crate::predictions::PredictionMatrix;

use super::check_aligned;

/// Per-sample feature rows for the forest. Built from fold matrices the
/// columns are fold-major: all class probabilities of fold 1, then fold 2...
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    sample_ids: Vec<String>,
    rows: Vec<Vec<f64>>,
    labels: Option<Vec<usize>>,
    n_features: usize,
    vocab: ClassVocabulary,
}

impl FeatureTable {
    pub fn new(
        sample_ids: Vec<String>,
        rows: Vec<Vec<f64>>,
        labels: Option<Vec<usize>>,
        vocab: ClassVocabulary,
    ) -> Result<Self> {
        if sample_ids.len() != rows.len() {
            return Err(Error::Argument(format!(
                "{} ids for {} feature rows",
                sample_ids.len(),
                rows.len()
            )));
        }
        let n_features = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != n_features) {
            return Err(Error::Argument(format!(
                "feature row {i} has {} columns, expected {n_features}",
                rows[i].len()
            )));
        }
        if rows.iter().flatten().any(|v| v.is_nan()) {
            return Err(Error::Argument("NaN feature value".into()));
        }
        if let Some(l) = &labels {
            if l.len() != rows.len() {
                return Err(Error::Argument(format!(
                    "{} labels for {} rows",
                    l.len(),
                    rows.len()
                )));
            }
            if let Some(bad) = l.iter().find(|c| **c >= vocab.len()) {
                return Err(Error::Argument(format!("label {bad} outside vocabulary")));
            }
        }
        Ok(Self {
            sample_ids,
            rows,
            labels,
            n_features,
            vocab,
        })
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn vocab(&self) -> &ClassVocabulary {
        &self.vocab
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

pub fn build_ensemble_features(
    fold_matrices: &[PredictionMatrix],
    labels: Option<Vec<usize>>,
) -> Result<FeatureTable> {
    check_aligned(fold_matrices)?;
    let first = &fold_matrices[0];
    let rows = (0..first.len())
        .map(|i| {
            fold_matrices
                .iter()
                .flat_map(|m| m.rows()[i].iter().copied())
                .collect()
        })
        .collect();
    let mut table = FeatureTable::new(
        first.sample_ids().to_vec(),
        rows,
        labels,
        first.vocab().clone(),
    )?;
    table.n_features = fold_matrices.len() * first.n_classes();
    Ok(table)
}
