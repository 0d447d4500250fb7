use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictions::argmax;
use crate::rng::Rng;

/// Gini impurity `1 - sum(p_c^2)` of a class-count vector.
pub fn gini(class_counts: &[u64]) -> Result<f64> {
    let n: u64 = class_counts.iter().sum();
    if n == 0 {
        return Err(Error::Argument("gini of an empty node".into()));
    }
    Ok(gini_unchecked(class_counts, n))
}

fn gini_unchecked(counts: &[u64], n: u64) -> f64 {
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    /// Samples with `x[feature] < threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        counts: Vec<u64>,
    },
}

/// Nodes stored in an arena; the root is `nodes[0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

pub(crate) struct GrowParams {
    pub mtry: usize,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub n_classes: usize,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl DecisionTree {
    /// Class voted by the leaf `x` falls into (majority, ties to lowest id).
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[*feature] < *threshold {
                        *left
                    } else {
                        *right
                    }
                }
                Node::Leaf { counts } => {
                    let as_f: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
                    return argmax(&as_f);
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Structural check used when loading persisted models.
    pub(crate) fn validate(&self, n_features: usize, n_classes: usize) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::Format("tree without nodes".into()));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            match node {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if *feature >= n_features
                        || threshold.is_nan()
                        || *left <= i
                        || *right <= i
                        || *left >= self.nodes.len()
                        || *right >= self.nodes.len()
                    {
                        return Err(Error::Format(format!("invalid split node {i}")));
                    }
                }
                Node::Leaf { counts } => {
                    if counts.len() != n_classes || counts.iter().all(|c| *c == 0) {
                        return Err(Error::Format(format!("invalid leaf node {i}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Grow a tree on the rows listed in `sample` (duplicates allowed).
    pub(crate) fn grow(
        rows: &[Vec<f64>],
        labels: &[usize],
        sample: Vec<usize>,
        params: &GrowParams,
        rng: &mut Rng,
    ) -> Self {
        let n_features = rows[0].len();
        let mut nodes = vec![Node::Leaf { counts: Vec::new() }];
        let mut work = vec![(0usize, sample, 0usize)];

        while let Some((at, members, depth)) = work.pop() {
            let counts = class_counts(&members, labels, params.n_classes);
            let n = members.len() as u64;
            let pure = counts.iter().filter(|c| **c > 0).count() <= 1;
            let depth_capped = params.max_depth.is_some_and(|d| depth >= d);
            if pure || depth_capped || members.len() < 2 * params.min_leaf {
                nodes[at] = Node::Leaf { counts };
                continue;
            }

            let mut features = index::sample(rng, n_features, params.mtry).into_vec();
            features.sort_unstable();
            let parent = gini_unchecked(&counts, n);
            let best = features
                .iter()
                .filter_map(|&f| best_threshold(rows, labels, &members, f, parent, params))
                .fold(None::<Candidate>, |best, c| match best {
                    Some(b) if b.gain >= c.gain => Some(b),
                    _ => Some(c),
                });

            let Some(best) = best else {
                nodes[at] = Node::Leaf { counts };
                continue;
            };
            let (left, right): (Vec<usize>, Vec<usize>) = members
                .into_iter()
                .partition(|&i| rows[i][best.feature] < best.threshold);
            let l = nodes.len();
            nodes.push(Node::Leaf { counts: Vec::new() });
            nodes.push(Node::Leaf { counts: Vec::new() });
            nodes[at] = Node::Split {
                feature: best.feature,
                threshold: best.threshold,
                left: l,
                right: l + 1,
            };
            // Right pushed first so the left subtree is grown first.
            work.push((l + 1, right, depth + 1));
            work.push((l, left, depth + 1));
        }
        DecisionTree { nodes }
    }
}

fn class_counts(members: &[usize], labels: &[usize], n_classes: usize) -> Vec<u64> {
    let mut counts = vec![0u64; n_classes];
    for &i in members {
        counts[labels[i]] += 1;
    }
    counts
}

/// Best Gini-gain threshold on one feature; thresholds are midpoints between
/// consecutive distinct values, scanned in increasing order so the first
/// maximum (lowest threshold) wins.
fn best_threshold(
    rows: &[Vec<f64>],
    labels: &[usize],
    members: &[usize],
    feature: usize,
    parent: f64,
    params: &GrowParams,
) -> Option<Candidate> {
    let mut sorted: Vec<(f64, usize)> = members
        .iter()
        .map(|&i| (rows[i][feature], labels[i]))
        .collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

    let n = sorted.len();
    let mut right = vec![0u64; params.n_classes];
    for &(_, c) in &sorted {
        right[c] += 1;
    }
    let mut left = vec![0u64; params.n_classes];
    let mut best: Option<Candidate> = None;
    for i in 0..n - 1 {
        let c = sorted[i].1;
        left[c] += 1;
        right[c] -= 1;
        let (a, b) = (sorted[i].0, sorted[i + 1].0);
        if a == b {
            continue;
        }
        let n_left = i + 1;
        let n_right = n - n_left;
        if n_left < params.min_leaf || n_right < params.min_leaf {
            continue;
        }
        let weighted = (n_left as f64 * gini_unchecked(&left, n_left as u64)
            + n_right as f64 * gini_unchecked(&right, n_right as u64))
            / n as f64;
        let gain = parent - weighted;
        if best.as_ref().is_none_or(|b| gain > b.gain) {
            let mut threshold = a + (b - a) / 2.0;
            if threshold <= a {
                threshold = b;
            }
            best = Some(Candidate {
                feature,
                threshold,
                gain,
            });
        }
    }
    best
}
