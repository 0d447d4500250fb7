use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::dataset::{validate_fractions, ClassVocabulary, SplitSet};
use crate::ensemble::RfParams;
use crate::error::{Error, Result};
use crate::xai::LimeParams;

/// Predictor command value selecting the in-process stub predictor.
pub const BUILTIN_STUB: &str = "builtin:stub";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictionsConfig {
    /// Directory holding `predictions_fold<i>_<set>.csv`; defaults to the
    /// configuration file's directory.
    pub dir: Option<PathBuf>,
    /// Explicit per-fold files, overriding the naming convention.
    pub test_models: Option<Vec<PathBuf>>,
    pub test_ensemble: Option<Vec<PathBuf>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct XaiConfig {
    /// Holds `<image_id>_fold<i>.act.tnsr` / `.grad.tnsr` pairs.
    pub tensor_dir: Option<PathBuf>,
    /// Holds `<image_id>.png`.
    pub image_dir: Option<PathBuf>,
    /// Images to explain; discovered from `tensor_dir` when empty.
    pub images: Vec<String>,
    /// External predictor argv, or `["builtin:stub"]`. `{fold}` in an
    /// argument is replaced by the fold number.
    pub predictor: Vec<String>,
    /// Folds to run LIME for (1-based). Empty disables LIME.
    pub lime_folds: Vec<usize>,
    /// Class explained by LIME; defaults to the positive class.
    pub target_class: Option<String>,
    pub alpha: f64,
    /// Also write heatmaps as TNSR files.
    pub dump_heatmaps: bool,
}

impl Default for XaiConfig {
    fn default() -> Self {
        Self {
            tensor_dir: None,
            image_dir: None,
            images: Vec::new(),
            predictor: Vec::new(),
            lime_folds: Vec::new(),
            target_class: None,
            alpha: 0.4,
            dump_heatmaps: false,
        }
    }
}

fn default_fractions() -> [f64; 3] {
    [0.7, 0.15, 0.15]
}

fn default_k() -> usize {
    3
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    index: PathBuf,
    classes: Vec<String>,
    positive_class: Option<String>,
    #[serde(default = "default_fractions")]
    fractions: [f64; 3],
    #[serde(default = "default_k")]
    k: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_out")]
    out: PathBuf,
    #[serde(default)]
    predictions: PredictionsConfig,
    #[serde(default)]
    rf: RfParams,
    #[serde(default)]
    lime: LimeParams,
    #[serde(default)]
    xai: XaiConfig,
}

/// Command-line values that win over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub k: Option<usize>,
    pub index: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub index: PathBuf,
    pub vocab: ClassVocabulary,
    pub positive_class: usize,
    pub fractions: [f64; 3],
    pub k: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub predictions: PredictionsConfig,
    pub rf: RfParams,
    pub lime: LimeParams,
    pub xai: XaiConfig,
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::from_toml(&text, base, overrides)
    }

    /// Parse a configuration; relative paths resolve against `base`.
    pub fn from_toml(text: &str, base: &Path, overrides: &Overrides) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let vocab = ClassVocabulary::new(raw.classes).map_err(|e| Error::Config(e.to_string()))?;
        let positive_class = match &raw.positive_class {
            Some(name) => vocab
                .index_of(name)
                .ok_or_else(|| Error::Config(format!("positive_class {name:?} is not a class")))?,
            None => 1,
        };
        let resolve = |p: &Path| {
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        let resolve_opt = |p: &Option<PathBuf>| p.as_deref().map(resolve);

        let mut predictions = raw.predictions;
        predictions.dir = Some(resolve_opt(&predictions.dir).unwrap_or_else(|| base.to_path_buf()));
        predictions.test_models = predictions
            .test_models
            .map(|v| v.iter().map(|p| resolve(p)).collect());
        predictions.test_ensemble = predictions
            .test_ensemble
            .map(|v| v.iter().map(|p| resolve(p)).collect());
        let mut xai = raw.xai;
        xai.tensor_dir = resolve_opt(&xai.tensor_dir);
        xai.image_dir = resolve_opt(&xai.image_dir);

        let config = RunConfig {
            index: overrides
                .index
                .clone()
                .unwrap_or_else(|| resolve(&raw.index)),
            vocab,
            positive_class,
            fractions: raw.fractions,
            k: overrides.k.unwrap_or(raw.k),
            seed: overrides.seed.unwrap_or(raw.seed),
            out: overrides.out.clone().unwrap_or_else(|| resolve(&raw.out)),
            predictions,
            rf: raw.rf,
            lime: raw.lime,
            xai,
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::Config(format!(
                "k must be at least 2, got {}",
                self.k
            )));
        }
        validate_fractions(self.fractions).map_err(|e| Error::Config(e.to_string()))?;
        self.lime
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if !(0.0..=1.0).contains(&self.xai.alpha) {
            return Err(Error::Config(format!(
                "xai.alpha {} outside [0, 1]",
                self.xai.alpha
            )));
        }
        for (name, list) in [
            ("test_models", &self.predictions.test_models),
            ("test_ensemble", &self.predictions.test_ensemble),
        ] {
            if let Some(l) = list {
                if l.len() != self.k {
                    return Err(Error::Config(format!(
                        "predictions.{name} lists {} files for k = {}",
                        l.len(),
                        self.k
                    )));
                }
            }
        }
        if let Some(f) = self
            .xai
            .lime_folds
            .iter()
            .find(|f| **f == 0 || **f > self.k)
        {
            return Err(Error::Config(format!(
                "lime fold {f} outside 1..={}",
                self.k
            )));
        }
        Ok(())
    }

    /// Per-fold prediction files for `set`, and whether they were listed
    /// explicitly (explicit files must exist).
    pub fn fold_prediction_paths(&self, set: SplitSet) -> (Vec<PathBuf>, bool) {
        let explicit = match set {
            SplitSet::TestModels => self.predictions.test_models.clone(),
            SplitSet::TestEnsemble => self.predictions.test_ensemble.clone(),
            SplitSet::Train => None,
        };
        match explicit {
            Some(v) => (v, true),
            None => {
                let dir = self.predictions.dir.clone().unwrap_or_default();
                let paths = (1..=self.k)
                    .map(|i| dir.join(format!("predictions_fold{i}_{}.csv", set.as_str())))
                    .collect();
                (paths, false)
            }
        }
    }

    pub fn lime_target_class(&self) -> Result<usize> {
        match &self.xai.target_class {
            Some(name) => self
                .vocab
                .index_of(name)
                .ok_or_else(|| Error::Config(format!("xai.target_class {name:?} is not a class"))),
            None => Ok(self.positive_class),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
index = "index.csv"
classes = ["normal", "viral"]
"#;

    #[test]
    fn defaults_and_relative_paths() {
        let c =
            RunConfig::from_toml(MINIMAL, Path::new("/data/run"), &Overrides::default()).unwrap();
        assert_eq!(c.index, PathBuf::from("/data/run/index.csv"));
        assert_eq!(c.out, PathBuf::from("/data/run/out"));
        assert_eq!(c.k, 3);
        assert_eq!(c.fractions, [0.7, 0.15, 0.15]);
        assert_eq!(c.positive_class, 1);
        assert_eq!(c.rf.n_trees, 100);
        assert_eq!(c.lime.n_samples, 1000);
        let (paths, explicit) = c.fold_prediction_paths(SplitSet::TestModels);
        assert!(!explicit);
        assert_eq!(
            paths[2],
            PathBuf::from("/data/run/predictions_fold3_test_models.csv")
        );
    }

    #[test]
    fn flags_win() {
        let o = Overrides {
            seed: Some(99),
            out: Some(PathBuf::from("/tmp/x")),
            k: Some(5),
            index: None,
        };
        let text = format!("{MINIMAL}seed = 3\nk = 4\n");
        let c = RunConfig::from_toml(&text, Path::new("."), &o).unwrap();
        assert_eq!((c.seed, c.k), (99, 5));
        assert_eq!(c.out, PathBuf::from("/tmp/x"));
    }

    #[test]
    fn rejects_bad_values() {
        let base = Path::new(".");
        let o = Overrides::default();
        for extra in [
            "k = 1\n",
            "fractions = [0.5, 0.2, 0.2]\n",
            "positive_class = \"bacterial\"\n",
            "bogus = 1\n",
            "[lime]\nn_samples = 3\n",
            "[xai]\nlime_folds = [4]\n",
            "[predictions]\ntest_models = [\"a.csv\"]\n",
        ] {
            let err = RunConfig::from_toml(&format!("{MINIMAL}{extra}"), base, &o).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{extra}: {err}");
        }
    }
}
