use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::ClassVocabulary;
use crate::error::{Error, Result};
use crate::predictions::{argmax, PredictionMatrix};
use crate::rng::{derive_seed, seeded};

use super::features::FeatureTable;
use super::tree::{DecisionTree, GrowParams};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfParams {
    pub n_trees: usize,
    /// Features tried per split; `None` means `ceil(sqrt(F))`.
    pub mtry: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
}

impl Default for RfParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            mtry: None,
            max_depth: None,
            min_leaf: 1,
        }
    }
}

impl RfParams {
    /// Copy with `mtry` filled in for `n_features` columns, after validation.
    pub fn resolve(&self, n_features: usize) -> Result<RfParams> {
        if self.n_trees == 0 {
            return Err(Error::Argument("n_trees must be at least 1".into()));
        }
        if self.min_leaf == 0 {
            return Err(Error::Argument("min_leaf must be at least 1".into()));
        }
        if n_features == 0 {
            return Err(Error::Argument("feature table has no columns".into()));
        }
        let mtry = self
            .mtry
            .unwrap_or_else(|| (n_features as f64).sqrt().ceil() as usize);
        if mtry == 0 || mtry > n_features {
            return Err(Error::Argument(format!(
                "mtry must be in 1..={n_features}, got {mtry}"
            )));
        }
        Ok(RfParams {
            mtry: Some(mtry),
            ..self.clone()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestModel {
    pub params: RfParams,
    pub seed: u64,
    pub vocab: ClassVocabulary,
    pub n_features: usize,
    pub trees: Vec<DecisionTree>,
}

impl RandomForestModel {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: RandomForestModel =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("forest model: {e}")))?;
        if model.trees.len() != model.params.n_trees {
            return Err(Error::Format(format!(
                "model declares {} trees but holds {}",
                model.params.n_trees,
                model.trees.len()
            )));
        }
        for tree in &model.trees {
            tree.validate(model.n_features, model.vocab.len())?;
        }
        Ok(model)
    }
}

/// Bootstrap sample of size n, drawn with replacement.
pub(crate) fn bootstrap(n: usize, rng: &mut crate::rng::Rng) -> Vec<usize> {
    (0..n).map(|_| rng.gen_range(0..n)).collect()
}

fn training_inputs<'a>(
    features: &'a FeatureTable,
    params: &RfParams,
) -> Result<(&'a [usize], RfParams)> {
    let labels = features
        .labels()
        .ok_or_else(|| Error::Argument("forest training needs labels".into()))?;
    if features.is_empty() {
        return Err(Error::Argument("empty training table".into()));
    }
    let mut present = labels.to_vec();
    present.sort_unstable();
    present.dedup();
    if present.len() < 2 {
        return Err(Error::Degenerate(format!(
            "forest training labels contain a single class ({})",
            features.vocab().name(present[0])
        )));
    }
    Ok((labels, params.resolve(features.n_features())?))
}

fn grow_tree(
    features: &FeatureTable,
    labels: &[usize],
    params: &RfParams,
    seed: u64,
    index: usize,
) -> DecisionTree {
    let mut rng = seeded(derive_seed(seed, index as u64));
    let sample = bootstrap(features.len(), &mut rng);
    let grow = GrowParams {
        mtry: params.mtry.expect("resolved"),
        max_depth: params.max_depth,
        min_leaf: params.min_leaf,
        n_classes: features.vocab().len(),
    };
    DecisionTree::grow(features.rows(), labels, sample, &grow, &mut rng)
}

/// Train a forest, building trees in parallel. Each tree draws from its own
/// stream `derive_seed(seed, tree_index)`, so the result is identical to
/// [`rf_train_sequential`].
pub fn rf_train(
    features: &FeatureTable,
    params: &RfParams,
    seed: u64,
) -> Result<RandomForestModel> {
    let (labels, params) = training_inputs(features, params)?;
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|i| grow_tree(features, labels, &params, seed, i))
        .collect();
    Ok(assemble(features, params, seed, trees))
}

pub fn rf_train_sequential(
    features: &FeatureTable,
    params: &RfParams,
    seed: u64,
) -> Result<RandomForestModel> {
    let (labels, params) = training_inputs(features, params)?;
    let trees = (0..params.n_trees)
        .map(|i| grow_tree(features, labels, &params, seed, i))
        .collect();
    Ok(assemble(features, params, seed, trees))
}

fn assemble(
    features: &FeatureTable,
    params: RfParams,
    seed: u64,
    trees: Vec<DecisionTree>,
) -> RandomForestModel {
    RandomForestModel {
        params,
        seed,
        vocab: features.vocab().clone(),
        n_features: features.n_features(),
        trees,
    }
}

/// Plurality vote of the trees (ties to the lowest class id) together with
/// the per-class vote fractions.
pub fn rf_predict(
    model: &RandomForestModel,
    features: &FeatureTable,
) -> Result<(Vec<usize>, PredictionMatrix)> {
    if !features.is_empty() && features.n_features() != model.n_features {
        return Err(Error::Argument(format!(
            "model expects {} features, table has {}",
            model.n_features,
            features.n_features()
        )));
    }
    let n_classes = model.vocab.len();
    let n_trees = model.trees.len() as f64;
    let rows: Vec<Vec<f64>> = features
        .rows()
        .par_iter()
        .map(|x| {
            let mut votes = vec![0usize; n_classes];
            for tree in &model.trees {
                votes[tree.predict(x)] += 1;
            }
            votes.into_iter().map(|v| v as f64 / n_trees).collect()
        })
        .collect();
    let labels = rows.iter().map(|r| argmax(r)).collect();
    let matrix = PredictionMatrix::new(features.sample_ids().to_vec(), model.vocab.clone(), rows)?;
    Ok((labels, matrix))
}
