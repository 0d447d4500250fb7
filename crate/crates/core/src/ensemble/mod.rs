//! Fold ensembles: soft majority vote over summed probability matrices and a
//! random forest trained on the concatenated fold probabilities.

mod features;
mod forest;
mod tree;
mod vote;

pub use features::{build_ensemble_features, FeatureTable};
pub use forest::{rf_predict, rf_train, rf_train_sequential, RandomForestModel, RfParams};
pub use tree::{gini, DecisionTree, Node};
pub use vote::soft_majority_vote;

use crate::error::{Error, Result};
use crate::predictions::PredictionMatrix;

pub(crate) fn check_aligned(folds: &[PredictionMatrix]) -> Result<()> {
    let first = folds
        .first()
        .ok_or_else(|| Error::Argument("no fold prediction matrices given".into()))?;
    for (i, m) in folds.iter().enumerate().skip(1) {
        if m.vocab() != first.vocab() {
            return Err(Error::Alignment(format!(
                "fold {} class order {:?} differs from fold 1 {:?}",
                i + 1,
                m.vocab().names(),
                first.vocab().names()
            )));
        }
        if m.sample_ids() != first.sample_ids() {
            let pos = m
                .sample_ids()
                .iter()
                .zip(first.sample_ids())
                .position(|(a, b)| a != b)
                .unwrap_or(m.len().min(first.len()));
            return Err(Error::Alignment(format!(
                "fold {} sample ids diverge from fold 1 at row {pos} ({} vs {} rows)",
                i + 1,
                m.len(),
                first.len()
            )));
        }
    }
    Ok(())
}
