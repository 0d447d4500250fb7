use crate::error::{Error, Result};

use super::heatmap::Heatmap;
use super::image::{round_channel, RgbImage};
use super::lime::LimeExplanation;
use super::segment::SuperpixelMap;

const OUTLINE: [u8; 3] = [255, 255, 0];
const DIM_FACTOR: f64 = 0.4;

/// Piecewise-linear ramp: blue at 0, green at 0.5, red at 1.
pub fn colormap(v: f64) -> [f64; 3] {
    let v = v.clamp(0.0, 1.0);
    if v <= 0.5 {
        let t = 2.0 * v;
        [0.0, 255.0 * t, 255.0 * (1.0 - t)]
    } else {
        let t = 2.0 * v - 1.0;
        [255.0 * t, 255.0 * (1.0 - t), 0.0]
    }
}

/// Blend the colourised heatmap over the image:
/// `(1 - alpha) * image + alpha * colour`, rounded half-up.
pub fn overlay(image: &RgbImage, heatmap: &Heatmap, alpha: f64) -> Result<RgbImage> {
    if heatmap.width() != image.width() || heatmap.height() != image.height() {
        return Err(Error::Argument(format!(
            "heatmap {}x{} does not match image {}x{}",
            heatmap.width(),
            heatmap.height(),
            image.width(),
            image.height()
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Argument(format!("alpha {alpha} outside [0, 1]")));
    }
    let pixels = image
        .pixels()
        .iter()
        .zip(heatmap.values())
        .map(|(p, &v)| {
            let c = colormap(v);
            [0, 1, 2].map(|i| round_channel((1.0 - alpha) * p[i] as f64 + alpha * c[i]))
        })
        .collect();
    RgbImage::new(image.width(), image.height(), pixels)
}

/// Keep the top superpixels at full intensity with a one-pixel outline and
/// darken everything else by 60%.
pub fn lime_render(
    image: &RgbImage,
    segments: &SuperpixelMap,
    expl: &LimeExplanation,
) -> Result<RgbImage> {
    segments.check_matches(image)?;
    if expl.weights.len() != segments.n_superpixels() {
        return Err(Error::Argument(format!(
            "explanation covers {} superpixels, map has {}",
            expl.weights.len(),
            segments.n_superpixels()
        )));
    }
    let mut selected = vec![false; segments.n_superpixels()];
    for &id in &expl.top {
        selected[id] = true;
    }
    let mut out = image.clone();
    let w = image.width();
    for (i, p) in out.pixels_mut().iter_mut().enumerate() {
        let (x, y) = (i % w, i / w);
        if selected[segments.label(x, y)] {
            if segments.is_boundary(x, y) {
                *p = OUTLINE;
            }
        } else {
            *p = p.map(|c| round_channel(c as f64 * DIM_FACTOR));
        }
    }
    Ok(out)
}
