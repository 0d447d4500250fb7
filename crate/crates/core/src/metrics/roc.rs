use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::order_free_mean;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RocCurve {
    /// `(fpr, tpr)` pairs, non-decreasing in both coordinates.
    pub points: Vec<(f64, f64)>,
    /// Score threshold that produced each point (`+inf` for the origin
    /// anchor). Absent for interpolated curves.
    pub thresholds: Option<Vec<f64>>,
    pub positive_class: usize,
}

impl RocCurve {
    pub fn fpr(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn tpr(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }

    /// `(fpr, tpr)` at the point produced by `threshold`, if one exists.
    pub fn at_threshold(&self, threshold: f64) -> Option<(f64, f64)> {
        let th = self.thresholds.as_ref()?;
        th.iter()
            .position(|t| *t == threshold)
            .map(|i| self.points[i])
    }
}

/// ROC curve of positive-class scores.
///
/// Every distinct score is a threshold; a sample counts as predicted
/// positive when `score >= threshold`. The curve starts at the `(0, 0)`
/// anchor (threshold above every score) and ends at `(1, 1)`.
pub fn roc_curve(scores: &[f64], truth: &[bool], positive_class: usize) -> Result<RocCurve> {
    if scores.len() != truth.len() {
        return Err(Error::Argument(format!(
            "{} scores vs {} labels",
            scores.len(),
            truth.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Argument("NaN score".into()));
    }
    let n_pos = truth.iter().filter(|t| **t).count();
    let n_neg = truth.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Degenerate(format!(
            "ROC needs both classes, got {n_pos} positive and {n_neg} negative samples"
        )));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    let mut thresholds = vec![f64::INFINITY];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        while i < order.len() && scores[order[i]] == t {
            if truth[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
        thresholds.push(t);
    }
    Ok(RocCurve {
        points,
        thresholds: Some(thresholds),
        positive_class,
    })
}

/// Trapezoidal area under the curve.
pub fn auc(curve: &RocCurve) -> f64 {
    curve
        .points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}

/// Collapse runs of equal fpr to their largest tpr.
fn collapse_vertical(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for &(x, y) in points {
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 = last.1.max(y),
            _ => out.push((x, y)),
        }
    }
    out
}

fn interpolate(curve: &[(f64, f64)], x: f64) -> f64 {
    let idx = curve.partition_point(|p| p.0 < x);
    if idx < curve.len() && curve[idx].0 == x {
        return curve[idx].1;
    }
    if idx == 0 {
        return curve[0].1;
    }
    if idx == curve.len() {
        return curve[curve.len() - 1].1;
    }
    let (x0, y0) = curve[idx - 1];
    let (x1, y1) = curve[idx];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Mean of several ROC curves on the union of their fpr values.
///
/// Each curve is first reduced to one point per fpr (the highest tpr), then
/// its tpr is linearly interpolated on the shared grid; the result is the
/// per-grid-point arithmetic mean.
pub fn mean_roc(curves: &[RocCurve]) -> Result<RocCurve> {
    let first = curves
        .first()
        .ok_or_else(|| Error::Argument("mean ROC of an empty curve list".into()))?;
    if let Some(c) = curves
        .iter()
        .find(|c| c.positive_class != first.positive_class)
    {
        return Err(Error::Argument(format!(
            "curves disagree on the positive class ({} vs {})",
            first.positive_class, c.positive_class
        )));
    }
    if curves.iter().any(|c| c.points.is_empty()) {
        return Err(Error::Argument("empty ROC curve".into()));
    }

    let mut grid: Vec<f64> = curves.iter().flat_map(|c| c.fpr()).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let collapsed: Vec<Vec<(f64, f64)>> = curves
        .iter()
        .map(|c| collapse_vertical(&c.points))
        .collect();
    let mut column = vec![0.0; curves.len()];
    let points = grid
        .into_iter()
        .map(|x| {
            for (slot, c) in column.iter_mut().zip(&collapsed) {
                *slot = interpolate(c, x);
            }
            (x, order_free_mean(&mut column))
        })
        .collect();
    Ok(RocCurve {
        points,
        thresholds: None,
        positive_class: first.positive_class,
    })
}
