use serde::Serialize;

use crate::dataset::ClassVocabulary;
use crate::error::{Error, Result};

/// Rows are the true class, columns the predicted class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
    vocab: ClassVocabulary,
}

/// One-vs-rest counts for a single positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BinaryCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl BinaryCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

pub fn confusion_matrix(
    truth: &[usize],
    predicted: &[usize],
    vocab: &ClassVocabulary,
) -> Result<ConfusionMatrix> {
    if truth.len() != predicted.len() {
        return Err(Error::Argument(format!(
            "{} true labels vs {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    let c = vocab.len();
    let mut counts = vec![vec![0u64; c]; c];
    for (&t, &p) in truth.iter().zip(predicted) {
        if t >= c || p >= c {
            return Err(Error::Argument(format!(
                "class id {} outside vocabulary of {c}",
                t.max(p)
            )));
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix {
        counts,
        vocab: vocab.clone(),
    })
}

impl ConfusionMatrix {
    pub fn from_counts(counts: Vec<Vec<u64>>, vocab: &ClassVocabulary) -> Result<Self> {
        let c = vocab.len();
        if counts.len() != c || counts.iter().any(|r| r.len() != c) {
            return Err(Error::Argument(format!("confusion counts must be {c}x{c}")));
        }
        Ok(Self {
            counts,
            vocab: vocab.clone(),
        })
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn vocab(&self) -> &ClassVocabulary {
        &self.vocab
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes()).map(|i| self.counts[i][i]).sum()
    }

    /// Number of samples whose true class is `class`.
    pub fn support(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn binary(&self, positive: usize) -> BinaryCounts {
        let tp = self.counts[positive][positive];
        let fn_ = self.support(positive) - tp;
        let predicted_pos: u64 = self.counts.iter().map(|r| r[positive]).sum();
        let fp = predicted_pos - tp;
        let tn = self.total() - tp - fn_ - fp;
        BinaryCounts { tp, tn, fp, fn_ }
    }
}
