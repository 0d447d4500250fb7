use serde::Serialize;

use super::confusion::ConfusionMatrix;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub classes: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub macro_avg: Averages,
    pub weighted_avg: Averages,
    pub support: u64,
    /// Rates whose denominator was zero and were reported as 0.
    pub warnings: Vec<String>,
}

fn ratio(num: u64, den: u64, what: &str, class: &str, warnings: &mut Vec<String>) -> f64 {
    if den == 0 {
        warnings.push(format!(
            "{what} of class {class:?} is ill-defined (0/0), set to 0"
        ));
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision, recall and f1 per class (each class in turn as the positive
/// class), plus accuracy and macro/support-weighted averages.
pub fn classification_report(cm: &ConfusionMatrix) -> ClassificationReport {
    let n = cm.total();
    let mut warnings = Vec::new();
    let classes: Vec<ClassMetrics> = (0..cm.n_classes())
        .map(|c| {
            let name = cm.vocab().name(c);
            let b = cm.binary(c);
            let precision = ratio(b.tp, b.tp + b.fp, "precision", name, &mut warnings);
            let recall = ratio(b.tp, b.tp + b.fn_, "recall", name, &mut warnings);
            let f1 = if precision + recall > 0.0 {
                2.0 * (precision * recall) / (precision + recall)
            } else {
                0.0
            };
            ClassMetrics {
                class: name.to_string(),
                precision,
                recall,
                f1,
                support: b.tp + b.fn_,
            }
        })
        .collect();

    let k = classes.len() as f64;
    let macro_avg = Averages {
        precision: classes.iter().map(|c| c.precision).sum::<f64>() / k,
        recall: classes.iter().map(|c| c.recall).sum::<f64>() / k,
        f1: classes.iter().map(|c| c.f1).sum::<f64>() / k,
    };
    let weighted = |f: fn(&ClassMetrics) -> f64| {
        if n == 0 {
            0.0
        } else {
            classes.iter().map(|c| c.support as f64 * f(c)).sum::<f64>() / n as f64
        }
    };
    let weighted_avg = Averages {
        precision: weighted(|c| c.precision),
        recall: weighted(|c| c.recall),
        f1: weighted(|c| c.f1),
    };
    let accuracy = if n == 0 {
        warnings.push("accuracy is ill-defined on an empty matrix, set to 0".into());
        0.0
    } else {
        cm.trace() as f64 / n as f64
    };
    for w in &warnings {
        log::warn!("{w}");
    }
    ClassificationReport {
        classes,
        accuracy,
        macro_avg,
        weighted_avg,
        support: n,
        warnings,
    }
}

impl ClassificationReport {
    pub fn class(&self, name: &str) -> Option<&ClassMetrics> {
        self.classes.iter().find(|c| c.class == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ClassVocabulary;

    fn vocab() -> ClassVocabulary {
        ClassVocabulary::new(["normal", "viral"]).unwrap()
    }

    // positive class = viral (id 1)
    fn binary_cm(tp: u64, tn: u64, fp: u64, fn_: u64) -> ConfusionMatrix {
        ConfusionMatrix::from_counts(vec![vec![tn, fp], vec![fn_, tp]], &vocab()).unwrap()
    }

    #[test]
    fn random_forest_row_full_precision() {
        let r = classification_report(&binary_cm(185, 193, 8, 16));
        let viral = r.class("viral").unwrap();
        assert!((viral.precision - 185.0 / 193.0).abs() < 1e-15);
        assert!((viral.recall - 185.0 / 201.0).abs() < 1e-15);
        assert!((viral.precision - 0.95855).abs() < 5e-6);
        assert!((viral.recall - 0.92040).abs() < 5e-6);
        let normal = r.class("normal").unwrap();
        assert_eq!(format!("{:.2}", normal.precision), "0.92");
        assert_eq!(format!("{:.2}", normal.recall), "0.96");
        assert_eq!(viral.support, 201);
        assert_eq!(normal.support, 201);
    }

    #[test]
    fn perfect_classifier() {
        let cm = ConfusionMatrix::from_counts(vec![vec![5, 0], vec![0, 7]], &vocab()).unwrap();
        let r = classification_report(&cm);
        for c in &r.classes {
            assert_eq!((c.precision, c.recall, c.f1), (1.0, 1.0, 1.0));
        }
        assert_eq!(r.accuracy, 1.0);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn zero_denominator_warns() {
        // nothing predicted as viral, no viral samples
        let cm = ConfusionMatrix::from_counts(vec![vec![4, 0], vec![0, 0]], &vocab()).unwrap();
        let r = classification_report(&cm);
        let viral = r.class("viral").unwrap();
        assert_eq!((viral.precision, viral.recall, viral.f1), (0.0, 0.0, 0.0));
        assert_eq!(r.warnings.len(), 2);
    }

    #[test]
    fn averaging_identities() {
        let v = ClassVocabulary::new(["a", "b", "c"]).unwrap();
        let cm =
            ConfusionMatrix::from_counts(vec![vec![10, 2, 3], vec![1, 20, 4], vec![0, 5, 30]], &v)
                .unwrap();
        let r = classification_report(&cm);
        let mean_f1 = r.classes.iter().map(|c| c.f1).sum::<f64>() / 3.0;
        assert_eq!(r.macro_avg.f1, mean_f1);
        let w: f64 = r
            .classes
            .iter()
            .map(|c| c.support as f64 * c.f1)
            .sum::<f64>()
            / 75.0;
        assert_eq!(r.weighted_avg.f1, w);
        assert_eq!(r.accuracy, 60.0 / 75.0);
    }

    #[test]
    fn json_has_aggregate_blocks() {
        let r = classification_report(&binary_cm(188, 193, 8, 14));
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert!(v["macro_avg"]["f1"].is_number());
        assert!(v["weighted_avg"]["precision"].is_number());
        assert_eq!(v["classes"][1]["class"], "viral");
        assert_eq!(v["support"], 403);
    }
}
