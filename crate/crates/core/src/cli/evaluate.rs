use std::fmt::Write as _;
use std::path::Path;

use crate::dataset::{load_index, DatasetIndex, SplitSet};
use crate::error::{Error, Result};
use crate::io::source_name;
use crate::metrics::{
    auc, classification_report, confusion_matrix, mean_roc, roc_csv, roc_curve, roc_svg, RocCurve,
    RocSeries,
};
use crate::predictions::{load_predictions, PredictionMatrix};

use super::{CommandOutcome, Outputs, RunConfig};

/// Ensemble prediction files looked up in the output directory.
pub(crate) const ENSEMBLE_UNITS: [&str; 3] =
    ["smv_test_models", "smv_test_ensemble", "rf_test_ensemble"];

struct Evaluated {
    name: String,
    macro_f1: f64,
    roc: Option<RocCurve>,
}

pub(crate) fn truth_for(
    index: &DatasetIndex,
    m: &PredictionMatrix,
    file: &Path,
) -> Result<Vec<usize>> {
    m.sample_ids()
        .iter()
        .enumerate()
        .map(|(row, id)| {
            index.label_of(id).ok_or_else(|| Error::Schema {
                source_name: source_name(file),
                line: Some(row + 2),
                message: format!("sample_id {id:?} is not in the index"),
            })
        })
        .collect()
}

fn evaluate_unit(
    name: &str,
    m: &PredictionMatrix,
    truth: &[usize],
    config: &RunConfig,
    outputs: &mut Outputs,
    confusion_rows: &mut String,
) -> Result<Evaluated> {
    let predicted = m.hard_labels();
    let cm = confusion_matrix(truth, &predicted, &config.vocab)?;
    let report = classification_report(&cm);
    outputs.add(format!("report_{name}.json"), report.to_json());
    let b = cm.binary(config.positive_class);
    let _ = writeln!(
        confusion_rows,
        "{name},{},{},{},{}",
        b.tp, b.tn, b.fp, b.fn_
    );

    let positive: Vec<bool> = truth.iter().map(|t| *t == config.positive_class).collect();
    let roc = match roc_curve(
        &m.column(config.positive_class),
        &positive,
        config.positive_class,
    ) {
        Ok(curve) => {
            outputs.add(format!("roc_{name}.csv"), roc_csv(&curve));
            let series = [RocSeries {
                label: name.to_string(),
                curve: &curve,
            }];
            outputs.add(
                format!("roc_{name}.svg"),
                roc_svg(&format!("ROC {name}"), &series),
            );
            Some(curve)
        }
        Err(Error::Degenerate(msg)) => {
            log::warn!("{name}: no ROC curve ({msg})");
            None
        }
        Err(e) => return Err(e),
    };
    Ok(Evaluated {
        name: name.to_string(),
        macro_f1: report.macro_avg.f1,
        roc,
    })
}

/// Reports, confusion counts and ROC data for every fold over test_models and
/// for every ensemble prediction file found in the output directory.
pub fn cmd_evaluate(config: &RunConfig) -> Result<CommandOutcome> {
    let index = load_index(&config.index, config.vocab.clone())?;
    let mut outputs = Outputs::default();
    let mut confusion_rows = String::from("name,TP,TN,FP,FN\n");
    let mut folds = Vec::new();

    let (paths, explicit) = config.fold_prediction_paths(SplitSet::TestModels);
    for (i, path) in paths.iter().enumerate() {
        if !explicit && !path.exists() {
            log::warn!("no predictions for fold {} ({})", i + 1, path.display());
            continue;
        }
        let m = load_predictions(path, &config.vocab)?;
        let truth = truth_for(&index, &m, path)?;
        folds.push(evaluate_unit(
            &format!("fold{}", i + 1),
            &m,
            &truth,
            config,
            &mut outputs,
            &mut confusion_rows,
        )?);
    }
    if folds.is_empty() {
        return Err(Error::Schema {
            source_name: config
                .predictions
                .dir
                .clone()
                .unwrap_or_default()
                .display()
                .to_string(),
            line: None,
            message: "no fold prediction files found for test_models".into(),
        });
    }

    let mut ensembles = Vec::new();
    for unit in ENSEMBLE_UNITS {
        let path = config.out.join(format!("predictions_{unit}.csv"));
        if !path.exists() {
            continue;
        }
        let m = load_predictions(&path, &config.vocab)?;
        let truth = truth_for(&index, &m, &path)?;
        ensembles.push(evaluate_unit(
            unit,
            &m,
            &truth,
            config,
            &mut outputs,
            &mut confusion_rows,
        )?);
    }

    let mut summary_csv = String::from("name,macro_f1\n");
    let mut summary = String::from("name                  macro_f1      auc\n");
    for e in folds.iter().chain(&ensembles) {
        let _ = writeln!(summary_csv, "{},{:?}", e.name, e.macro_f1);
        let auc_text = e
            .roc
            .as_ref()
            .map_or("-".to_string(), |c| format!("{:.4}", auc(c)));
        let _ = writeln!(summary, "{:<20}{:>10.4}{:>9}", e.name, e.macro_f1, auc_text);
    }
    outputs.add("macro_f1_summary.csv", summary_csv);
    outputs.add("confusion_counts.csv", confusion_rows);

    let fold_curves: Vec<RocCurve> = folds.iter().filter_map(|f| f.roc.clone()).collect();
    if !fold_curves.is_empty() {
        let mean = mean_roc(&fold_curves)?;
        outputs.add("roc_mean_folds.csv", roc_csv(&mean));
        let mut series: Vec<RocSeries> = folds
            .iter()
            .filter_map(|f| {
                f.roc.as_ref().map(|c| RocSeries {
                    label: f.name.clone(),
                    curve: c,
                })
            })
            .collect();
        series.push(RocSeries {
            label: "mean".into(),
            curve: &mean,
        });
        outputs.add("roc_folds.svg", roc_svg("ROC curves of the folds", &series));
        let _ = writeln!(
            summary,
            "{:<20}{:>10}{:>9.4}",
            "mean ROC (folds)",
            "",
            auc(&mean)
        );
    }
    let ensemble_series: Vec<RocSeries> = ensembles
        .iter()
        .filter_map(|e| {
            e.roc.as_ref().map(|c| RocSeries {
                label: e.name.clone(),
                curve: c,
            })
        })
        .collect();
    if !ensemble_series.is_empty() {
        outputs.add(
            "roc_ensembles.svg",
            roc_svg("ROC curves of the ensembles", &ensemble_series),
        );
    }

    let written = outputs.commit(&config.out)?;
    Ok(CommandOutcome { summary, written })
}
