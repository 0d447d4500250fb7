//! Labeled sample inventory, the stratified train/test_models/test_ensemble
//! holdout split, and stratified k-fold plans.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{csv_error, csv_reader, source_name};
use crate::rng::{derive_seed, seeded};

/// Ordered class names. The position of a name is its class id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct ClassVocabulary {
    names: Vec<String>,
}

impl ClassVocabulary {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() < 2 {
            return Err(Error::Argument(format!(
                "class vocabulary needs at least 2 classes, got {}",
                names.len()
            )));
        }
        let mut seen = HashSet::new();
        for n in &names {
            if n.is_empty() {
                return Err(Error::Argument("empty class name".into()));
            }
            if !seen.insert(n.as_str()) {
                return Err(Error::Argument(format!("duplicate class name {n:?}")));
            }
        }
        Ok(Self { names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

impl TryFrom<Vec<String>> for ClassVocabulary {
    type Error = Error;
    fn try_from(v: Vec<String>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ClassVocabulary> for Vec<String> {
    fn from(v: ClassVocabulary) -> Self {
        v.names
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleRecord {
    pub sample_id: String,
    /// Class id into the index vocabulary.
    pub label: usize,
    pub image_path: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct DatasetIndex {
    records: Vec<SampleRecord>,
    vocab: ClassVocabulary,
    by_id: HashMap<String, usize>,
}

impl DatasetIndex {
    pub fn new(records: Vec<SampleRecord>, vocab: ClassVocabulary) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if r.sample_id.is_empty() {
                return Err(Error::Argument(format!(
                    "record {i} has an empty sample_id"
                )));
            }
            if r.label >= vocab.len() {
                return Err(Error::Argument(format!(
                    "record {:?} has class id {} outside the vocabulary",
                    r.sample_id, r.label
                )));
            }
            if by_id.insert(r.sample_id.clone(), i).is_some() {
                return Err(Error::Argument(format!(
                    "duplicate sample_id {:?}",
                    r.sample_id
                )));
            }
        }
        Ok(Self {
            records,
            vocab,
            by_id,
        })
    }

    pub fn records(&self) -> &[SampleRecord] {
        &self.records
    }

    pub fn vocab(&self) -> &ClassVocabulary {
        &self.vocab
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, sample_id: &str) -> Option<&SampleRecord> {
        self.by_id.get(sample_id).map(|&i| &self.records[i])
    }

    pub fn label_of(&self, sample_id: &str) -> Option<usize> {
        self.get(sample_id).map(|r| r.label)
    }

    /// Sample count per class id.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.vocab.len()];
        for r in &self.records {
            counts[r.label] += 1;
        }
        counts
    }

    /// `(sample_id, class id)` pairs in index order.
    pub fn labeled_ids(&self) -> Vec<(String, usize)> {
        self.records
            .iter()
            .map(|r| (r.sample_id.clone(), r.label))
            .collect()
    }
}

/// Read a `sample_id,label,image_path` file.
pub fn load_index(path: &Path, vocab: ClassVocabulary) -> Result<DatasetIndex> {
    let name = source_name(path);
    let mut reader = csv_reader(path)?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let expected = ["sample_id", "label", "image_path"];
    if header.len() != 3 || header.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(Error::Schema {
            source_name: name,
            line: Some(1),
            message: format!(
                "expected header `sample_id,label,image_path`, found `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut records = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let line = row.position().map(|p| p.line() as usize);
        if row.len() != 3 {
            return Err(Error::Schema {
                source_name: name,
                line,
                message: format!("expected 3 fields, found {}", row.len()),
            });
        }
        let id = &row[0];
        if id.is_empty() {
            return Err(Error::Schema {
                source_name: name,
                line,
                message: "missing sample_id".into(),
            });
        }
        if let Some(first) = seen.get(id) {
            return Err(Error::Schema {
                source_name: name,
                line,
                message: format!("duplicate sample_id {id:?} (first seen on line {first})"),
            });
        }
        let label = vocab.index_of(&row[1]).ok_or_else(|| Error::Vocabulary {
            source_name: name.clone(),
            line,
            label: row[1].to_string(),
        })?;
        seen.insert(id.to_string(), line.unwrap_or(0));
        records.push(SampleRecord {
            sample_id: id.to_string(),
            label,
            image_path: (!row[2].is_empty()).then(|| PathBuf::from(&row[2])),
        });
    }
    DatasetIndex::new(records, vocab)
}

/// The three holdout sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitSet {
    Train,
    TestModels,
    TestEnsemble,
}

impl SplitSet {
    pub const ALL: [SplitSet; 3] = [
        SplitSet::Train,
        SplitSet::TestModels,
        SplitSet::TestEnsemble,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitSet::Train => "train",
            SplitSet::TestModels => "test_models",
            SplitSet::TestEnsemble => "test_ensemble",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|set| set.as_str() == s)
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for SplitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitAssignment {
    /// In source index order.
    assignments: Vec<(String, SplitSet)>,
    pub fractions: [f64; 3],
    pub seed: u64,
}

impl SplitAssignment {
    pub fn iter(&self) -> impl Iterator<Item = (&str, SplitSet)> {
        self.assignments.iter().map(|(id, s)| (id.as_str(), *s))
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn set_of(&self, sample_id: &str) -> Option<SplitSet> {
        self.assignments
            .iter()
            .find(|(id, _)| id == sample_id)
            .map(|(_, s)| *s)
    }

    pub fn ids(&self, set: SplitSet) -> Vec<&str> {
        self.iter()
            .filter(|(_, s)| *s == set)
            .map(|(id, _)| id)
            .collect()
    }
}

/// Largest-remainder allocation of `count` items over three fractions.
///
/// Each set first receives `floor(fraction * count)`; the leftover items go
/// to the sets with the largest fractional parts, ties resolved in the order
/// train, test_models, test_ensemble.
pub fn allocate(count: usize, fractions: [f64; 3]) -> [usize; 3] {
    let total: f64 = fractions.iter().sum();
    let quotas = fractions.map(|f| f / total * count as f64);
    // Quotas a hair below an integer are treated as that integer.
    let mut sizes = quotas.map(|q| (q + 1e-9).floor().max(0.0) as usize);
    let mut assigned: usize = sizes.iter().sum();
    while assigned > count {
        let i = (0..3).rev().find(|&i| sizes[i] > 0).unwrap();
        sizes[i] -= 1;
        assigned -= 1;
    }
    let mut order = [0usize, 1, 2];
    let frac = |i: usize| quotas[i] - sizes[i] as f64;
    order.sort_by(|&a, &b| frac(b).total_cmp(&frac(a)).then(a.cmp(&b)));
    for &i in order.iter().cycle().take(count - assigned) {
        sizes[i] += 1;
    }
    sizes
}

/// Stratified holdout split into train / test_models / test_ensemble.
pub fn stratified_holdout_split(
    index: &DatasetIndex,
    fractions: [f64; 3],
    seed: u64,
) -> Result<SplitAssignment> {
    if index.is_empty() {
        return Err(Error::Argument("cannot split an empty index".into()));
    }
    validate_fractions(fractions)?;

    let n_classes = index.vocab().len();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, r) in index.records().iter().enumerate() {
        members[r.label].push(i);
    }

    let mut sets = vec![SplitSet::Train; index.len()];
    for (class, rows) in members.iter_mut().enumerate() {
        if rows.is_empty() {
            continue;
        }
        let mut rng = seeded(derive_seed(seed, class as u64));
        rows.shuffle(&mut rng);
        let sizes = allocate(rows.len(), fractions);
        let mut start = 0;
        for set in SplitSet::ALL {
            let end = start + sizes[set.index()];
            for &row in &rows[start..end] {
                sets[row] = set;
            }
            start = end;
        }
    }

    let assignments = index
        .records()
        .iter()
        .zip(sets)
        .map(|(r, s)| (r.sample_id.clone(), s))
        .collect();
    Ok(SplitAssignment {
        assignments,
        fractions,
        seed,
    })
}

pub fn validate_fractions(fractions: [f64; 3]) -> Result<()> {
    if fractions.iter().any(|f| !f.is_finite() || *f < 0.0) {
        return Err(Error::Argument(format!(
            "split fractions must be non-negative, got {fractions:?}"
        )));
    }
    let sum: f64 = fractions.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Argument(format!(
            "split fractions must sum to 1, got {sum}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<String>,
    pub validation: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub folds: Vec<Fold>,
    pub seed: u64,
    /// Classes with fewer than `k` samples: some validation folds lack them.
    pub sparse_classes: Vec<usize>,
}

impl FoldPlan {
    /// Zero-based fold whose validation set holds `sample_id`.
    pub fn fold_of(&self, sample_id: &str) -> Option<usize> {
        self.folds
            .iter()
            .position(|f| f.validation.iter().any(|id| id == sample_id))
    }
}

/// Stratified k-fold plan over `(sample_id, class id)` pairs.
///
/// Each class is shuffled and dealt round-robin into the k validation
/// buckets. The deal continues where the previous class stopped, which keeps
/// the overall fold sizes balanced as well.
pub fn stratified_kfold(ids: &[(String, usize)], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Argument(format!("k must be at least 2, got {k}")));
    }
    if ids.is_empty() {
        return Err(Error::Argument(
            "cannot build folds from an empty id set".into(),
        ));
    }
    let mut seen = HashSet::with_capacity(ids.len());
    for (id, _) in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::Argument(format!("duplicate sample_id {id:?}")));
        }
    }

    let n_classes = ids.iter().map(|(_, c)| c + 1).max().unwrap_or(0);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, (_, c)) in ids.iter().enumerate() {
        members[*c].push(i);
    }

    let mut bucket_of = vec![0usize; ids.len()];
    let mut next_bucket = 0;
    let mut sparse_classes = Vec::new();
    for (class, rows) in members.iter_mut().enumerate() {
        if rows.is_empty() {
            continue;
        }
        if rows.len() < k {
            log::warn!(
                "class {class} has {} samples for {k} folds; some validation folds will lack it",
                rows.len()
            );
            sparse_classes.push(class);
        }
        let mut rng = seeded(derive_seed(seed, class as u64));
        rows.shuffle(&mut rng);
        for &row in rows.iter() {
            bucket_of[row] = next_bucket;
            next_bucket = (next_bucket + 1) % k;
        }
    }

    let folds = (0..k)
        .map(|f| {
            let (validation, train): (Vec<_>, Vec<_>) = ids
                .iter()
                .enumerate()
                .partition(|(i, _)| bucket_of[*i] == f);
            Fold {
                train: train.into_iter().map(|(_, (id, _))| id.clone()).collect(),
                validation: validation
                    .into_iter()
                    .map(|(_, (id, _))| id.clone())
                    .collect(),
            }
        })
        .collect();

    Ok(FoldPlan {
        k,
        folds,
        seed,
        sparse_classes,
    })
}
