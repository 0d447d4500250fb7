//! Black-box predictors queried by LIME.
//!
//! The external protocol: the configured command is run with
//! `--manifest <path> --out <path>`. The manifest is a `row_id,image_path`
//! table of PNG files; the command writes a prediction file (header
//! `sample_id,<classes...>`, `sample_id` = `row_id`) and exits 0.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::Command;

use crate::dataset::ClassVocabulary;
use crate::error::{Error, Result};
use crate::predictions::load_predictions;

use super::image::RgbImage;
use super::segment::SuperpixelMap;

pub trait Predictor {
    /// One class-probability row per image, in input order.
    fn predict(&self, images: &[RgbImage]) -> Result<Vec<Vec<f64>>>;
}

impl<F> Predictor for F
where
    F: Fn(&[RgbImage]) -> Result<Vec<Vec<f64>>>,
{
    fn predict(&self, images: &[RgbImage]) -> Result<Vec<Vec<f64>>> {
        self(images)
    }
}

/// Runs an external command per batch.
#[derive(Debug, Clone)]
pub struct ExternalPredictor {
    pub program: String,
    pub args: Vec<String>,
    pub vocab: ClassVocabulary,
    /// Scratch directory for manifests and images; a fresh temporary
    /// directory is used when unset.
    pub scratch: Option<PathBuf>,
}

impl ExternalPredictor {
    pub fn new(command: &[String], vocab: ClassVocabulary) -> Result<Self> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| Error::Config("empty predictor command".into()))?;
        Ok(Self {
            program: program.clone(),
            args: args.to_vec(),
            vocab,
            scratch: None,
        })
    }
}

impl Predictor for ExternalPredictor {
    fn predict(&self, images: &[RgbImage]) -> Result<Vec<Vec<f64>>> {
        let dir = match &self.scratch {
            Some(p) => tempfile::Builder::new().prefix("lime-").tempdir_in(p),
            None => tempfile::Builder::new().prefix("foldwise-lime-").tempdir(),
        }
        .map_err(|e| Error::io(self.scratch.clone().unwrap_or_default(), e))?;

        let mut manifest = String::from("row_id,image_path\n");
        let mut row_ids = Vec::with_capacity(images.len());
        for (i, img) in images.iter().enumerate() {
            let id = format!("row{i}");
            let path = dir.path().join(format!("{id}.png"));
            img.save_png(&path)?;
            let _ = writeln!(manifest, "{id},{}", path.display());
            row_ids.push(id);
        }
        let manifest_path = dir.path().join("manifest.csv");
        std::fs::write(&manifest_path, manifest).map_err(|e| Error::io(&manifest_path, e))?;
        let out_path = dir.path().join("predictions.csv");

        let output = Command::new(&self.program)
            .args(&self.args)
            .arg("--manifest")
            .arg(&manifest_path)
            .arg("--out")
            .arg(&out_path)
            .output()
            .map_err(|e| Error::Protocol(format!("cannot run {:?}: {e}", self.program)))?;
        if !output.status.success() {
            return Err(Error::Protocol(format!(
                "{:?} exited with {}: {}",
                self.program,
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        let reply = load_predictions(&out_path, &self.vocab)
            .map_err(|e| Error::Protocol(format!("malformed predictor reply: {e}")))?;
        let by_id: HashMap<&str, &Vec<f64>> = reply
            .sample_ids()
            .iter()
            .map(String::as_str)
            .zip(reply.rows())
            .collect();
        if reply.len() != row_ids.len() {
            return Err(Error::Protocol(format!(
                "predictor answered {} rows for {} manifest rows",
                reply.len(),
                row_ids.len()
            )));
        }
        row_ids
            .iter()
            .map(|id| {
                by_id
                    .get(id.as_str())
                    .map(|r| (*r).clone())
                    .ok_or_else(|| Error::Protocol(format!("predictor reply lacks row {id}")))
            })
            .collect()
    }
}

/// In-process two-class predictor whose positive-class probability is
/// linear in the mean intensity of each superpixel:
/// `p = clamp(bias + sum_j weight_j * intensity_j / 255, 0, 1)`.
#[derive(Debug, Clone)]
pub struct StubPredictor {
    pub segments: SuperpixelMap,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl StubPredictor {
    /// Equal weights summing to one: `p` is the average superpixel intensity.
    pub fn uniform(segments: SuperpixelMap) -> Self {
        let n = segments.n_superpixels();
        Self {
            segments,
            weights: vec![1.0 / n as f64; n],
            bias: 0.0,
        }
    }

    pub fn positive_probability(&self, image: &RgbImage) -> Result<f64> {
        if image.width() != self.segments.width() || image.height() != self.segments.height() {
            return Err(Error::Protocol(
                "stub predictor got an image of the wrong size".into(),
            ));
        }
        let n = self.segments.n_superpixels();
        let mut sum = vec![0.0; n];
        let mut count = vec![0usize; n];
        for (p, &l) in image.pixels().iter().zip(self.segments.labels()) {
            sum[l] += (p[0] as f64 + p[1] as f64 + p[2] as f64) / 3.0;
            count[l] += 1;
        }
        let p = self.bias
            + self
                .weights
                .iter()
                .zip(sum.iter().zip(&count))
                .map(|(w, (s, c))| w * s / *c as f64 / 255.0)
                .sum::<f64>();
        Ok(p.clamp(0.0, 1.0))
    }
}

impl Predictor for StubPredictor {
    fn predict(&self, images: &[RgbImage]) -> Result<Vec<Vec<f64>>> {
        images
            .iter()
            .map(|img| self.positive_probability(img).map(|p| vec![1.0 - p, p]))
            .collect()
    }
}
