use crate::error::{Error, Result};

use super::image::RgbImage;

/// Per-pixel superpixel ids, row-major, forming the range `0..n_superpixels`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperpixelMap {
    height: usize,
    width: usize,
    labels: Vec<usize>,
    n_superpixels: usize,
}

impl SuperpixelMap {
    pub fn new(height: usize, width: usize, labels: Vec<usize>) -> Result<Self> {
        if height == 0 || width == 0 || labels.len() != height * width {
            return Err(Error::Argument(format!(
                "superpixel map {height}x{width} with {} labels",
                labels.len()
            )));
        }
        let n = labels.iter().max().map_or(0, |m| m + 1);
        let mut present = vec![false; n];
        for &l in &labels {
            present[l] = true;
        }
        if present.iter().any(|p| !p) {
            return Err(Error::Argument("superpixel ids are not contiguous".into()));
        }
        Ok(Self {
            height,
            width,
            labels,
            n_superpixels: n,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_superpixels(&self) -> usize {
        self.n_superpixels
    }

    pub fn label(&self, x: usize, y: usize) -> usize {
        self.labels[y * self.width + x]
    }

    /// True when a 4-neighbour inside the image lies in another superpixel.
    pub fn is_boundary(&self, x: usize, y: usize) -> bool {
        let l = self.label(x, y);
        (x > 0 && self.label(x - 1, y) != l)
            || (x + 1 < self.width && self.label(x + 1, y) != l)
            || (y > 0 && self.label(x, y - 1) != l)
            || (y + 1 < self.height && self.label(x, y + 1) != l)
    }

    pub(crate) fn check_matches(&self, image: &RgbImage) -> Result<()> {
        if self.width != image.width() || self.height != image.height() {
            return Err(Error::Argument(format!(
                "superpixel map {}x{} does not match image {}x{}",
                self.width,
                self.height,
                image.width(),
                image.height()
            )));
        }
        Ok(())
    }
}

/// Split the image into `s` x `s` rectangular cells, ids row-major. Leftover
/// rows and columns join the last cell row/column. `s` larger than the image
/// is clamped.
pub fn segment_grid(image: &RgbImage, s: usize) -> Result<SuperpixelMap> {
    if s == 0 {
        return Err(Error::Argument("grid size must be at least 1".into()));
    }
    let (h, w) = (image.height(), image.width());
    let limit = h.min(w);
    let s = if s > limit {
        log::warn!("grid size {s} exceeds image size {w}x{h}; clamped to {limit}");
        limit
    } else {
        s
    };
    let (cell_h, cell_w) = (h / s, w / s);
    let labels = (0..h)
        .flat_map(|y| (0..w).map(move |x| (y / cell_h).min(s - 1) * s + (x / cell_w).min(s - 1)))
        .collect();
    SuperpixelMap::new(h, w, labels)
}
