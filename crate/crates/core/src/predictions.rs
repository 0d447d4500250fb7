//! Per-sample class-probability tables: the interchange format between any
//! trained model and this crate.

use std::collections::HashSet;
use std::path::Path;

use crate::dataset::ClassVocabulary;
use crate::error::{Error, Result};
use crate::io::{csv_error, csv_reader, source_name, write_atomic};

/// Tolerance on `|row sum - 1|`.
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrix {
    sample_ids: Vec<String>,
    vocab: ClassVocabulary,
    rows: Vec<Vec<f64>>,
}

impl PredictionMatrix {
    /// Build a validated matrix. Errors name the offending row by position.
    pub fn new(
        sample_ids: Vec<String>,
        vocab: ClassVocabulary,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if sample_ids.len() != rows.len() {
            return Err(Error::Argument(format!(
                "{} sample ids for {} rows",
                sample_ids.len(),
                rows.len()
            )));
        }
        let mut seen = HashSet::with_capacity(sample_ids.len());
        for id in &sample_ids {
            if id.is_empty() || !seen.insert(id.as_str()) {
                return Err(Error::Argument(format!(
                    "empty or duplicate sample id {id:?}"
                )));
            }
        }
        for (i, row) in rows.iter().enumerate() {
            if let Err(message) = check_row(row, vocab.len()) {
                return Err(Error::Validation {
                    source_name: "prediction matrix".into(),
                    line: None,
                    message: format!("row {i} ({}): {message}", sample_ids[i]),
                });
            }
        }
        Ok(Self {
            sample_ids,
            vocab,
            rows,
        })
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn vocab(&self) -> &ClassVocabulary {
        &self.vocab
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.vocab.len()
    }

    /// Probabilities of `class` for every sample.
    pub fn column(&self, class: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[class]).collect()
    }

    pub fn hard_labels(&self) -> Vec<usize> {
        self.rows.iter().map(|r| argmax(r)).collect()
    }

    /// Serialize in the prediction-file format.
    ///
    /// Values are written in shortest round-trip decimal form, so reloading
    /// reproduces every entry exactly.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("sample_id");
        for name in self.vocab.names() {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (id, row) in self.sample_ids.iter().zip(&self.rows) {
            out.push_str(id);
            for v in row {
                out.push(',');
                out.push_str(&format_prob(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv_string().as_bytes())
    }
}

fn format_prob(v: f64) -> String {
    // `{:?}` keeps a trailing `.0` on integers and round-trips exactly.
    format!("{v:?}")
}

fn check_row(row: &[f64], n_classes: usize) -> std::result::Result<(), String> {
    if row.len() != n_classes {
        return Err(format!(
            "expected {n_classes} probabilities, found {}",
            row.len()
        ));
    }
    if let Some(v) = row.iter().find(|v| !v.is_finite()) {
        return Err(format!("non-finite entry {v}"));
    }
    if let Some(v) = row.iter().find(|v| **v < 0.0) {
        return Err(format!("negative entry {v}"));
    }
    if let Some(v) = row.iter().find(|v| **v > 1.0) {
        return Err(format!("entry {v} exceeds 1"));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(format!(
            "row sums to {sum}, expected 1 within {ROW_SUM_TOLERANCE:e}"
        ));
    }
    Ok(())
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate().skip(1) {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

pub fn hard_labels(m: &PredictionMatrix) -> Vec<usize> {
    m.hard_labels()
}

/// Read a prediction file whose header must list `vocab` in order.
pub fn load_predictions(path: &Path, vocab: &ClassVocabulary) -> Result<PredictionMatrix> {
    let name = source_name(path);
    let mut reader = csv_reader(path)?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let header_ok = header.len() == vocab.len() + 1
        && &header[0] == "sample_id"
        && header
            .iter()
            .skip(1)
            .zip(vocab.names())
            .all(|(h, n)| h == n);
    if !header_ok {
        return Err(Error::Schema {
            source_name: name,
            line: Some(1),
            message: format!(
                "expected header `sample_id,{}`, found `{}`",
                vocab.names().join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line() as usize);
        let schema = |message: String| Error::Schema {
            source_name: name.clone(),
            line,
            message,
        };
        if record.len() != vocab.len() + 1 {
            return Err(schema(format!(
                "expected {} fields, found {}",
                vocab.len() + 1,
                record.len()
            )));
        }
        let id = &record[0];
        if id.is_empty() {
            return Err(schema("missing sample_id".into()));
        }
        if !seen.insert(id.to_string()) {
            return Err(schema(format!("duplicate sample_id {id:?}")));
        }
        let row = record
            .iter()
            .skip(1)
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| schema(format!("unparseable probability: {e}")))?;
        check_row(&row, vocab.len()).map_err(|message| Error::Validation {
            source_name: name.clone(),
            line,
            message: format!("sample {id:?}: {message}"),
        })?;
        ids.push(id.to_string());
        rows.push(row);
    }
    Ok(PredictionMatrix {
        sample_ids: ids,
        vocab: vocab.clone(),
        rows,
    })
}
