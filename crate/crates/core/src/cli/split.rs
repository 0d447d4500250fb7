use std::fmt::Write as _;

use crate::dataset::{
    load_index, stratified_holdout_split, stratified_kfold, DatasetIndex, SplitSet,
};
use crate::error::Result;

use super::{CommandOutcome, Outputs, RunConfig};

/// Holdout split plus k-fold plan over the train set; writes `split.csv`
/// and `folds.csv` (1-based fold of each train sample's validation set).
pub fn cmd_split(config: &RunConfig) -> Result<CommandOutcome> {
    let index = load_index(&config.index, config.vocab.clone())?;
    let split = stratified_holdout_split(&index, config.fractions, config.seed)?;

    let train: Vec<(String, usize)> = split
        .ids(SplitSet::Train)
        .into_iter()
        .map(|id| {
            (
                id.to_string(),
                index.label_of(id).expect("split ids come from the index"),
            )
        })
        .collect();
    let plan = stratified_kfold(&train, config.k, config.seed)?;

    let mut split_csv = String::from("sample_id,set\n");
    for (id, set) in split.iter() {
        let _ = writeln!(split_csv, "{id},{set}");
    }
    let mut folds_csv = String::from("sample_id,fold\n");
    for (id, _) in &train {
        let fold = plan
            .fold_of(id)
            .expect("every train id is in one validation fold");
        let _ = writeln!(folds_csv, "{id},{}", fold + 1);
    }

    let mut summary = String::new();
    let names = index.vocab().names();
    let _ = writeln!(
        summary,
        "{:<16}{}",
        "set",
        names.iter().map(|n| format!("{n:>12}")).collect::<String>()
    );
    let count_row = |ids: &[&str]| -> String {
        class_counts(&index, ids)
            .iter()
            .map(|c| format!("{c:>12}"))
            .collect()
    };
    let _ = writeln!(
        summary,
        "{:<16}{}",
        "all",
        count_row(
            &index
                .records()
                .iter()
                .map(|r| r.sample_id.as_str())
                .collect::<Vec<_>>()
        )
    );
    for set in SplitSet::ALL {
        let _ = writeln!(
            summary,
            "{:<16}{}",
            set.as_str(),
            count_row(&split.ids(set))
        );
    }
    for (i, fold) in plan.folds.iter().enumerate() {
        let t: Vec<&str> = fold.train.iter().map(String::as_str).collect();
        let v: Vec<&str> = fold.validation.iter().map(String::as_str).collect();
        let _ = writeln!(
            summary,
            "{:<16}{}",
            format!("fold{}/train", i + 1),
            count_row(&t)
        );
        let _ = writeln!(
            summary,
            "{:<16}{}",
            format!("fold{}/val", i + 1),
            count_row(&v)
        );
    }
    for c in &plan.sparse_classes {
        let _ = writeln!(
            summary,
            "warning: class {} has fewer than {} training samples",
            names[*c], config.k
        );
    }

    let mut outputs = Outputs::default();
    outputs.add("split.csv", split_csv);
    outputs.add("folds.csv", folds_csv);
    let written = outputs.commit(&config.out)?;
    Ok(CommandOutcome { summary, written })
}

fn class_counts(index: &DatasetIndex, ids: &[&str]) -> Vec<usize> {
    let mut counts = vec![0; index.vocab().len()];
    for id in ids {
        if let Some(c) = index.label_of(id) {
            counts[c] += 1;
        }
    }
    counts
}
