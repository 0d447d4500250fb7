use crate::error::{Error, Result};
use crate::rng::order_free_mean;

use super::tensor::Tensor32;

/// Row-major saliency map with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl Heatmap {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || values.len() != height * width {
            return Err(Error::Argument(format!(
                "heatmap {height}x{width} with {} values",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Argument(format!("heatmap value {v} outside [0, 1]")));
        }
        Ok(Self {
            height,
            width,
            values,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    /// `[H, W]` single-precision tensor, for TNSR dumps.
    pub fn to_tensor(&self) -> Tensor32 {
        Tensor32::new(
            vec![self.height, self.width],
            self.values.iter().map(|&v| v as f32).collect(),
        )
        .expect("heatmap dims are consistent")
    }

    pub fn from_tensor(t: &Tensor32) -> Result<Self> {
        if t.rank() != 2 {
            return Err(Error::Argument(format!(
                "heatmap tensor must be rank 2, got {:?}",
                t.shape()
            )));
        }
        Self::new(
            t.shape()[0],
            t.shape()[1],
            t.data().iter().map(|&v| v as f64).collect(),
        )
    }
}

/// Grad-CAM map from `[K, H, W]` activations and the target-class gradient.
///
/// Channel weights are the spatial mean of each gradient channel; the
/// weighted channel sum is rectified and min-max scaled to `[0, 1]`. A
/// constant map scales to all zeros.
pub fn grad_cam(activations: &Tensor32, gradients: &Tensor32) -> Result<Heatmap> {
    if activations.rank() != 3 {
        return Err(Error::Argument(format!(
            "activations must be [K, H, W], got {:?}",
            activations.shape()
        )));
    }
    if activations.shape() != gradients.shape() {
        return Err(Error::Argument(format!(
            "activation shape {:?} differs from gradient shape {:?}",
            activations.shape(),
            gradients.shape()
        )));
    }
    let (k, h, w) = (
        activations.shape()[0],
        activations.shape()[1],
        activations.shape()[2],
    );
    let plane = h * w;
    if k == 0 || plane == 0 {
        return Err(Error::Argument("empty activation tensor".into()));
    }

    let mut raw = vec![0.0f64; plane];
    for ch in 0..k {
        let g = &gradients.data()[ch * plane..(ch + 1) * plane];
        let alpha = g.iter().map(|&v| v as f64).sum::<f64>() / plane as f64;
        let a = &activations.data()[ch * plane..(ch + 1) * plane];
        for (r, &v) in raw.iter_mut().zip(a) {
            *r += alpha * v as f64;
        }
    }
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument(
            "non-finite Grad-CAM activation or gradient".into(),
        ));
    }
    for r in &mut raw {
        *r = r.max(0.0);
    }
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let values = if hi > lo {
        raw.iter()
            .map(|v| ((v - lo) / (hi - lo)).clamp(0.0, 1.0))
            .collect()
    } else {
        vec![0.0; plane]
    };
    Heatmap::new(h, w, values)
}

/// Corner-aligned bilinear resize.
pub fn upsample_bilinear(h: &Heatmap, out_w: usize, out_h: usize) -> Result<Heatmap> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::Argument(format!(
            "target size {out_w}x{out_h} must be positive"
        )));
    }
    let source = |i: usize, out: usize, len: usize| -> (usize, usize, f64) {
        if out == 1 || len == 1 {
            return (0, 0, 0.0);
        }
        let pos = (i * (len - 1)) as f64 / (out - 1) as f64;
        let i0 = (pos.floor() as usize).min(len - 1);
        let i1 = (i0 + 1).min(len - 1);
        (i0, i1, pos - i0 as f64)
    };
    let lerp = |a: f64, b: f64, t: f64| if t == 0.0 { a } else { a + (b - a) * t };

    let mut values = Vec::with_capacity(out_w * out_h);
    for y in 0..out_h {
        let (y0, y1, fy) = source(y, out_h, h.height);
        for x in 0..out_w {
            let (x0, x1, fx) = source(x, out_w, h.width);
            let top = lerp(h.get(y0, x0), h.get(y0, x1), fx);
            let bottom = lerp(h.get(y1, x0), h.get(y1, x1), fx);
            values.push(lerp(top, bottom, fy).clamp(0.0, 1.0));
        }
    }
    Heatmap::new(out_h, out_w, values)
}

/// Pixelwise mean of equally sized maps. Not renormalized.
pub fn average_heatmaps(maps: &[Heatmap]) -> Result<Heatmap> {
    let first = maps
        .first()
        .ok_or_else(|| Error::Argument("no heatmaps to average".into()))?;
    if let Some(m) = maps
        .iter()
        .find(|m| m.height != first.height || m.width != first.width)
    {
        return Err(Error::Argument(format!(
            "heatmap {}x{} differs from {}x{}",
            m.height, m.width, first.height, first.width
        )));
    }
    let mut column = vec![0.0; maps.len()];
    let values = (0..first.values.len())
        .map(|i| {
            for (slot, m) in column.iter_mut().zip(maps) {
                *slot = m.values[i];
            }
            order_free_mean(&mut column)
        })
        .collect();
    Heatmap::new(first.height, first.width, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t3(k: usize, data: Vec<f32>) -> Tensor32 {
        Tensor32::new(vec![k, 2, 2], data).unwrap()
    }

    #[test]
    fn single_channel_unit_gradient() {
        let h = grad_cam(&t3(1, vec![1.0, 2.0, 3.0, 4.0]), &t3(1, vec![1.0; 4])).unwrap();
        let expect = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        for (a, b) in h.values().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn negative_gradient_rectified_away() {
        let h = grad_cam(&t3(1, vec![1.0, 2.0, 3.0, 4.0]), &t3(1, vec![-1.0; 4])).unwrap();
        assert_eq!(h.values(), &[0.0; 4]);
    }

    #[test]
    fn two_channel_hand_example() {
        let act = t3(2, vec![1.0, 0.0, 0.0, 1.0, 0.0, 4.0, 2.0, 0.0]);
        let grad = t3(2, vec![1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1.0]);
        let h = grad_cam(&act, &grad).unwrap();
        assert_eq!(h.values(), &[0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn grad_cam_shape_errors() {
        let a = t3(1, vec![0.0; 4]);
        let g = Tensor32::new(vec![1, 4, 1], vec![0.0; 4]).unwrap();
        assert!(grad_cam(&a, &g).is_err());
        let flat = Tensor32::new(vec![4], vec![0.0; 4]).unwrap();
        assert!(grad_cam(&flat, &flat).is_err());
    }

    #[test]
    fn upsample_examples() {
        let one = Heatmap::new(1, 1, vec![0.3]).unwrap();
        let up = upsample_bilinear(&one, 5, 4).unwrap();
        assert_eq!((up.height(), up.width()), (4, 5));
        assert!(up.values().iter().all(|v| *v == 0.3));

        let checker = Heatmap::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let up = upsample_bilinear(&checker, 3, 3).unwrap();
        assert_eq!(up.get(0, 0), 0.0);
        assert_eq!(up.get(0, 2), 1.0);
        assert_eq!(up.get(2, 0), 1.0);
        assert_eq!(up.get(2, 2), 0.0);
        assert_eq!(up.get(1, 1), 0.5);

        assert_eq!(upsample_bilinear(&checker, 2, 2).unwrap(), checker);
        assert!(upsample_bilinear(&checker, 0, 2).is_err());
    }

    #[test]
    fn averaging() {
        let zeros = Heatmap::new(2, 2, vec![0.0; 4]).unwrap();
        let ones = Heatmap::new(2, 2, vec![1.0; 4]).unwrap();
        assert_eq!(
            average_heatmaps(&[zeros.clone(), ones]).unwrap().values(),
            &[0.5; 4]
        );
        let m = Heatmap::new(2, 2, vec![0.1, 0.7, 0.3, 0.9]).unwrap();
        assert_eq!(
            average_heatmaps(&[m.clone(), m.clone(), m.clone()]).unwrap(),
            m
        );
        assert_eq!(average_heatmaps(std::slice::from_ref(&m)).unwrap(), m);
        let small = Heatmap::new(1, 1, vec![0.0]).unwrap();
        assert!(average_heatmaps(&[zeros, small]).is_err());
        assert!(average_heatmaps(&[]).is_err());
    }

    #[test]
    fn heatmap_tensor_round_trip() {
        let m = Heatmap::new(2, 3, vec![0.0, 0.25, 0.5, 0.75, 1.0, 0.125]).unwrap();
        let back = Heatmap::from_tensor(&m.to_tensor()).unwrap();
        assert_eq!(back, m);
    }
}
