//! LIME with a linear surrogate over superpixel on/off masks.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded};

use super::image::RgbImage;
use super::linalg::solve_linear;
use super::predictor::Predictor;
use super::segment::SuperpixelMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FillRule {
    /// Switched-off superpixels take the mean colour of the whole image.
    #[default]
    MeanColor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimeParams {
    pub n_samples: usize,
    pub kernel_sigma: f64,
    pub ridge_lambda: f64,
    pub top_m: usize,
    /// Cells per side for the grid segmentation.
    pub grid_size: usize,
    pub fill_rule: FillRule,
    /// Perturbed images sent to the predictor per call.
    pub batch_size: usize,
}

impl Default for LimeParams {
    fn default() -> Self {
        Self {
            n_samples: 1000,
            kernel_sigma: 0.25,
            ridge_lambda: 1.0,
            top_m: 5,
            grid_size: 8,
            fill_rule: FillRule::MeanColor,
            batch_size: 100,
        }
    }
}

impl LimeParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 10 {
            return Err(Error::Argument(format!(
                "n_samples must be >= 10, got {}",
                self.n_samples
            )));
        }
        if self.kernel_sigma.is_nan() || self.kernel_sigma <= 0.0 {
            return Err(Error::Argument("kernel_sigma must be positive".into()));
        }
        if self.ridge_lambda.is_nan() || self.ridge_lambda < 0.0 {
            return Err(Error::Argument("ridge_lambda must be non-negative".into()));
        }
        if self.grid_size == 0 || self.batch_size == 0 {
            return Err(Error::Argument(
                "grid_size and batch_size must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// The sampled neighbourhood: masks, predictor responses and kernel weights.
#[derive(Debug, Clone, PartialEq)]
pub struct LimeSamples {
    pub masks: Vec<Vec<bool>>,
    pub responses: Vec<f64>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Surrogate {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimeExplanation {
    pub target_class: usize,
    pub intercept: f64,
    /// One coefficient per superpixel.
    pub weights: Vec<f64>,
    /// Superpixel ids by decreasing `|weight|`, at most `top_m`.
    pub top: Vec<usize>,
    pub params: LimeParams,
    pub seed: u64,
}

impl LimeExplanation {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("explanation serializes") + "\n"
    }
}

/// `exp(-d^2 / sigma^2)` with `d` the cosine distance between `mask` and the
/// all-ones mask. An all-zero mask is at distance 1.
pub fn kernel_weight(mask: &[bool], sigma: f64) -> f64 {
    let on = mask.iter().filter(|b| **b).count();
    let d = if on == 0 {
        1.0
    } else {
        1.0 - (on as f64 / mask.len() as f64).sqrt()
    };
    (-(d * d) / (sigma * sigma)).exp()
}

fn sample_masks(n_superpixels: usize, n_samples: usize, seed: u64) -> Vec<Vec<bool>> {
    (0..n_samples)
        .map(|i| {
            if i == 0 {
                vec![true; n_superpixels]
            } else {
                let mut rng = seeded(derive_seed(seed, i as u64));
                (0..n_superpixels).map(|_| rng.gen_bool(0.5)).collect()
            }
        })
        .collect()
}

fn perturb(image: &RgbImage, segments: &SuperpixelMap, mask: &[bool], fill: [u8; 3]) -> RgbImage {
    let mut out = image.clone();
    for (p, &l) in out.pixels_mut().iter_mut().zip(segments.labels()) {
        if !mask[l] {
            *p = fill;
        }
    }
    out
}

/// Draw the perturbation masks, query the predictor and weight the samples.
///
/// Mask 0 keeps every superpixel on; each later mask draws its bits from its
/// own seed stream so batching cannot change the draw.
pub fn lime_sample(
    image: &RgbImage,
    segments: &SuperpixelMap,
    predictor: &dyn Predictor,
    target_class: usize,
    params: &LimeParams,
    seed: u64,
) -> Result<LimeSamples> {
    params.validate()?;
    segments.check_matches(image)?;
    let n_sp = segments.n_superpixels();
    if n_sp + 1 > params.n_samples {
        log::warn!(
            "{n_sp} superpixels with only {} samples: the surrogate fit is underdetermined",
            params.n_samples
        );
    }

    let masks = sample_masks(n_sp, params.n_samples, seed);
    let fill = match params.fill_rule {
        FillRule::MeanColor => image.mean_color(),
    };
    let mut responses = Vec::with_capacity(masks.len());
    for batch in masks.chunks(params.batch_size) {
        let images: Vec<RgbImage> = batch
            .iter()
            .map(|m| perturb(image, segments, m, fill))
            .collect();
        let rows = predictor.predict(&images)?;
        if rows.len() != images.len() {
            return Err(Error::Protocol(format!(
                "predictor returned {} rows for {} images",
                rows.len(),
                images.len()
            )));
        }
        for row in rows {
            let p = *row.get(target_class).ok_or_else(|| {
                Error::Protocol(format!("prediction row lacks class {target_class}"))
            })?;
            if !p.is_finite() {
                return Err(Error::Protocol(format!("non-finite probability {p}")));
            }
            responses.push(p);
        }
    }
    let weights = masks
        .iter()
        .map(|m| kernel_weight(m, params.kernel_sigma))
        .collect();
    Ok(LimeSamples {
        masks,
        responses,
        weights,
    })
}

/// Weighted ridge regression of the responses on the mask bits, intercept
/// unpenalized, solved through the weighted normal equations.
pub fn fit_surrogate(samples: &LimeSamples, ridge_lambda: f64) -> Result<Surrogate> {
    let p = samples.masks.first().map_or(0, Vec::len);
    let dim = p + 1;
    let mut gram = vec![vec![0.0; dim]; dim];
    let mut rhs = vec![0.0; dim];
    let mut x = vec![0.0; dim];
    for ((mask, &y), &w) in samples
        .masks
        .iter()
        .zip(&samples.responses)
        .zip(&samples.weights)
    {
        x[0] = 1.0;
        for (slot, &bit) in x[1..].iter_mut().zip(mask) {
            *slot = if bit { 1.0 } else { 0.0 };
        }
        for i in 0..dim {
            if x[i] == 0.0 {
                continue;
            }
            rhs[i] += w * x[i] * y;
            for j in 0..dim {
                gram[i][j] += w * x[i] * x[j];
            }
        }
    }
    for (i, row) in gram.iter_mut().enumerate().skip(1) {
        row[i] += ridge_lambda;
    }
    let beta = solve_linear(gram, rhs)?;
    Ok(Surrogate {
        intercept: beta[0],
        coefficients: beta[1..].to_vec(),
    })
}

pub fn lime_explain(
    image: &RgbImage,
    segments: &SuperpixelMap,
    predictor: &dyn Predictor,
    target_class: usize,
    params: &LimeParams,
    seed: u64,
) -> Result<LimeExplanation> {
    let samples = lime_sample(image, segments, predictor, target_class, params, seed)?;
    let fit = fit_surrogate(&samples, params.ridge_lambda)?;
    let mut ranked: Vec<usize> = (0..fit.coefficients.len()).collect();
    ranked.sort_by(|&a, &b| {
        fit.coefficients[b]
            .abs()
            .total_cmp(&fit.coefficients[a].abs())
            .then(a.cmp(&b))
    });
    ranked.truncate(params.top_m);
    Ok(LimeExplanation {
        target_class,
        intercept: fit.intercept,
        weights: fit.coefficients,
        top: ranked,
        params: params.clone(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xai::segment::segment_grid;

    fn image() -> RgbImage {
        RgbImage::from_fn(8, 8, |x, y| [(x * 30) as u8, (y * 30) as u8, 100]).unwrap()
    }

    #[test]
    fn kernel_values() {
        assert_eq!(kernel_weight(&[true; 4], 0.25), 1.0);
        let half = kernel_weight(&[true, true, false, false], 0.25);
        let d: f64 = 1.0 - 0.5f64.sqrt();
        assert!((half - (-(d * d) / 0.0625).exp()).abs() < 1e-15);
        assert!((kernel_weight(&[false; 4], 0.25) - (-16.0f64).exp()).abs() < 1e-20);
    }

    #[test]
    fn first_mask_is_all_on() {
        let masks = sample_masks(5, 20, 3);
        assert_eq!(masks[0], vec![true; 5]);
        assert_eq!(masks.len(), 20);
        assert_eq!(masks, sample_masks(5, 20, 3));
        assert_ne!(masks, sample_masks(5, 20, 4));
    }

    #[test]
    fn constant_predictor_gives_flat_surrogate() {
        let img = image();
        let seg = segment_grid(&img, 4).unwrap();
        let constant = |imgs: &[RgbImage]| Ok(vec![vec![0.3, 0.7]; imgs.len()]);
        let params = LimeParams {
            n_samples: 200,
            ..LimeParams::default()
        };
        let e = lime_explain(&img, &seg, &constant, 1, &params, 9).unwrap();
        assert!(e.weights.iter().all(|w| w.abs() <= 1e-6));
        assert!((e.intercept - 0.7).abs() < 1e-9);
        assert_eq!(e.top.len(), 5);
    }

    #[test]
    fn same_seed_same_explanation() {
        let img = image();
        let seg = segment_grid(&img, 2).unwrap();
        let stub = crate::xai::StubPredictor::uniform(seg.clone());
        let params = LimeParams {
            n_samples: 50,
            batch_size: 7,
            ..LimeParams::default()
        };
        let a = lime_explain(&img, &seg, &stub, 1, &params, 1).unwrap();
        let b = lime_explain(&img, &seg, &stub, 1, &params, 1).unwrap();
        assert_eq!(a, b);
        let unbatched = LimeParams {
            batch_size: 1000,
            ..params
        };
        assert_eq!(
            lime_explain(&img, &seg, &stub, 1, &unbatched, 1)
                .unwrap()
                .weights,
            a.weights
        );
    }

    #[test]
    fn errors() {
        let img = image();
        let seg = segment_grid(&img, 2).unwrap();
        let failing =
            |_: &[RgbImage]| -> Result<Vec<Vec<f64>>> { Err(Error::Protocol("boom".into())) };
        assert!(matches!(
            lime_explain(&img, &seg, &failing, 1, &LimeParams::default(), 0),
            Err(Error::Protocol(_))
        ));
        let short = |imgs: &[RgbImage]| Ok(vec![vec![1.0]; imgs.len()]);
        assert!(lime_explain(&img, &seg, &short, 1, &LimeParams::default(), 0).is_err());
        let bad = LimeParams {
            n_samples: 5,
            ..LimeParams::default()
        };
        assert!(lime_explain(&img, &seg, &short, 0, &bad, 0).is_err());
        let other = segment_grid(&RgbImage::filled(3, 3, [0; 3]).unwrap(), 1).unwrap();
        assert!(lime_explain(&img, &other, &short, 0, &LimeParams::default(), 0).is_err());
    }
}
