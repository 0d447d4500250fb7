use std::fmt::Write as _;
use std::path::PathBuf;

use crate::dataset::{load_index, SplitSet};
use crate::ensemble::{build_ensemble_features, rf_predict, rf_train, soft_majority_vote};
use crate::error::{Error, Result};
use crate::predictions::{load_predictions, PredictionMatrix};

use super::evaluate::truth_for;
use super::{CommandOutcome, Outputs, RunConfig};

fn load_folds(config: &RunConfig, paths: &[PathBuf]) -> Result<Vec<PredictionMatrix>> {
    paths
        .iter()
        .map(|p| load_predictions(p, &config.vocab))
        .collect()
}

fn accuracy(truth: &[usize], predicted: &[usize]) -> f64 {
    let hits = truth.iter().zip(predicted).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len().max(1) as f64
}

/// Soft majority vote over each available set, and a random forest trained
/// on the test_models fold probabilities and scored on test_ensemble.
pub fn cmd_ensemble(config: &RunConfig) -> Result<CommandOutcome> {
    let index = load_index(&config.index, config.vocab.clone())?;
    let mut outputs = Outputs::default();
    let mut summary = String::new();

    let (model_paths, _) = config.fold_prediction_paths(SplitSet::TestModels);
    let model_folds = load_folds(config, &model_paths)?;
    let labels = truth_for(&index, &model_folds[0], &model_paths[0])?;

    let (smv, smv_labels) = soft_majority_vote(&model_folds)?;
    outputs.add("predictions_smv_test_models.csv", smv.to_csv_string());
    let _ = writeln!(
        summary,
        "soft majority vote (test_models): accuracy {:.4} over {} samples",
        accuracy(&labels, &smv_labels),
        labels.len()
    );

    let (ensemble_paths, explicit) = config.fold_prediction_paths(SplitSet::TestEnsemble);
    let have_ensemble_set = ensemble_paths.iter().all(|p| p.exists());
    if !have_ensemble_set && explicit {
        let missing = ensemble_paths.iter().find(|p| !p.exists()).unwrap();
        return Err(Error::io(
            missing,
            std::io::Error::new(std::io::ErrorKind::NotFound, "prediction file not found"),
        ));
    }

    if have_ensemble_set {
        let ensemble_folds = load_folds(config, &ensemble_paths)?;
        let train = build_ensemble_features(&model_folds, Some(labels))?;
        let model = rf_train(&train, &config.rf, config.seed)?;
        let test = build_ensemble_features(&ensemble_folds, None)?;
        let (rf_labels, votes) = rf_predict(&model, &test)?;
        outputs.add("predictions_rf_test_ensemble.csv", votes.to_csv_string());
        outputs.add("rf_model.json", model.to_json());

        let (smv_e, smv_e_labels) = soft_majority_vote(&ensemble_folds)?;
        outputs.add("predictions_smv_test_ensemble.csv", smv_e.to_csv_string());

        let known: Option<Vec<usize>> = test
            .sample_ids()
            .iter()
            .map(|id| index.label_of(id))
            .collect();
        if let Some(truth) = known {
            let _ = writeln!(
                summary,
                "random forest (test_ensemble): accuracy {:.4} over {} samples",
                accuracy(&truth, &rf_labels),
                truth.len()
            );
            let _ = writeln!(
                summary,
                "soft majority vote (test_ensemble): accuracy {:.4}",
                accuracy(&truth, &smv_e_labels)
            );
        }
    } else {
        log::warn!("test_ensemble fold predictions missing; random forest skipped");
        let _ = writeln!(
            summary,
            "random forest skipped: no test_ensemble fold predictions"
        );
    }

    let written = outputs.commit(&config.out)?;
    Ok(CommandOutcome { summary, written })
}
