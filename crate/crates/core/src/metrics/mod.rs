//! Confusion matrices, classification reports, ROC curves, AUC and the
//! cross-fold mean ROC.

mod confusion;
mod plot;
mod report;
mod roc;

pub use confusion::{confusion_matrix, BinaryCounts, ConfusionMatrix};
pub use plot::{roc_csv, roc_svg, RocSeries};
pub use report::{classification_report, Averages, ClassMetrics, ClassificationReport};
pub use roc::{auc, mean_roc, roc_curve, RocCurve};
