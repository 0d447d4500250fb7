//! Saliency: Grad-CAM compositing from exported tensors, LIME over a
//! black-box predictor, cross-fold heatmap averaging and overlay rendering.

mod heatmap;
mod image;
mod lime;
mod linalg;
mod predictor;
mod render;
mod segment;
mod tensor;

pub use heatmap::{average_heatmaps, grad_cam, upsample_bilinear, Heatmap};
pub use image::RgbImage;
pub use lime::{
    fit_surrogate, kernel_weight, lime_explain, lime_sample, FillRule, LimeExplanation, LimeParams,
    LimeSamples, Surrogate,
};
pub use linalg::solve_linear;
pub use predictor::{ExternalPredictor, Predictor, StubPredictor};
pub use render::{colormap, lime_render, overlay};
pub use segment::{segment_grid, SuperpixelMap};
pub use tensor::{read_tensor, write_tensor, Tensor32};
