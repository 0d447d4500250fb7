use crate::error::Result;
use crate::predictions::{argmax, PredictionMatrix};
use crate::rng::order_free_sum;

use super::check_aligned;

/// Soft majority vote: the fold probability matrices are summed and each
/// sample takes the class with the largest sum (ties to the lowest id).
///
/// The returned matrix is the sum divided by k so that it is again a valid
/// probability table. Cell sums are computed independently of fold order.
pub fn soft_majority_vote(
    fold_matrices: &[PredictionMatrix],
) -> Result<(PredictionMatrix, Vec<usize>)> {
    check_aligned(fold_matrices)?;
    let first = &fold_matrices[0];
    let k = fold_matrices.len() as f64;
    let mut cell = vec![0.0; fold_matrices.len()];
    let mut labels = Vec::with_capacity(first.len());
    let mut rows = Vec::with_capacity(first.len());
    for i in 0..first.len() {
        let sums: Vec<f64> = (0..first.n_classes())
            .map(|c| {
                for (slot, m) in cell.iter_mut().zip(fold_matrices) {
                    *slot = m.rows()[i][c];
                }
                order_free_sum(&mut cell)
            })
            .collect();
        labels.push(argmax(&sums));
        rows.push(sums.into_iter().map(|s| s / k).collect());
    }
    let matrix = PredictionMatrix::new(first.sample_ids().to_vec(), first.vocab().clone(), rows)?;
    Ok((matrix, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ClassVocabulary;
    use crate::error::Error;

    fn m(rows: Vec<Vec<f64>>) -> PredictionMatrix {
        let ids = (0..rows.len()).map(|i| format!("s{i}")).collect();
        PredictionMatrix::new(
            ids,
            ClassVocabulary::new(["normal", "viral"]).unwrap(),
            rows,
        )
        .unwrap()
    }

    #[test]
    fn summed_rows() {
        let folds = [
            m(vec![vec![0.6, 0.4]]),
            m(vec![vec![0.3, 0.7]]),
            m(vec![vec![0.4, 0.6]]),
        ];
        let (avg, labels) = soft_majority_vote(&folds).unwrap();
        assert_eq!(labels, vec![1]);
        assert!((avg.rows()[0][0] - 1.3 / 3.0).abs() < 1e-15);
        assert!((avg.rows()[0][1] - 1.7 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn identical_folds_keep_labels() {
        let a = m(vec![vec![0.2, 0.8], vec![0.9, 0.1], vec![0.5, 0.5]]);
        let (_, labels) = soft_majority_vote(&[a.clone(), a.clone(), a.clone()]).unwrap();
        assert_eq!(labels, a.hard_labels());
    }

    #[test]
    fn fold_order_does_not_matter() {
        let a = m(vec![vec![0.1, 0.9], vec![0.55, 0.45]]);
        let b = m(vec![vec![0.7, 0.3], vec![0.35, 0.65]]);
        let c = m(vec![vec![0.33, 0.67], vec![0.6, 0.4]]);
        let x = soft_majority_vote(&[a.clone(), b.clone(), c.clone()]).unwrap();
        let y = soft_majority_vote(&[c, a, b]).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn misaligned() {
        let a = m(vec![vec![0.1, 0.9]]);
        let b = m(vec![vec![0.1, 0.9], vec![0.5, 0.5]]);
        assert!(matches!(
            soft_majority_vote(&[a, b]),
            Err(Error::Alignment(_))
        ));
    }
}
