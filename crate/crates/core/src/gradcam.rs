//! Grad-CAM heatmaps from the CNN's native feature maps and gradients.
//!
//! Channel weights are the global average of the class-score gradient over
//! each feature map; the heatmap is the ReLU of the alpha-weighted sum of
//! the maps, upsampled to input resolution with corner-aligned bilinear
//! interpolation. The gradient is taken on the pre-softmax class score, so
//! confident predictions do not flatten the map.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::models::SmallCnn;
use crate::tensor::Tensor;

/// A class-conditional activation map at feature-map and input resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCamHeatmap {
    /// `[h', w']` at feature-map resolution; non-negative.
    pub raw: Tensor,
    /// `[H, W]` at input resolution; bilinear interpolation of `raw`, so
    /// values never leave the raw map's range.
    pub upsampled: Tensor,
    pub class_index: usize,
    /// Per-channel weights (gradient global averages).
    pub alphas: Vec<f64>,
}

/// Global average pooling of the class-score gradients: one weight per
/// feature-map channel.
pub fn gradcam_alphas(gradients: &Tensor) -> Result<Vec<f64>> {
    if gradients.rank() != 3 {
        return Err(Error::InvalidArgument(format!(
            "gradients must be rank 3 [channels, h, w], got shape {:?}",
            gradients.shape()
        )));
    }
    let (k, h, w) = (
        gradients.shape()[0],
        gradients.shape()[1],
        gradients.shape()[2],
    );
    let cells = (h * w) as f64;
    let data = gradients.data();
    Ok((0..k)
        .map(|c| data[c * h * w..(c + 1) * h * w].iter().sum::<f64>() / cells)
        .collect())
}

/// `ReLU(sum_k alpha_k A_k)` over the channel axis.
pub fn gradcam_heatmap(feature_maps: &Tensor, alphas: &[f64]) -> Result<Tensor> {
    if feature_maps.rank() != 3 {
        return Err(Error::InvalidArgument(format!(
            "feature maps must be rank 3, got shape {:?}",
            feature_maps.shape()
        )));
    }
    let (k, h, w) = (
        feature_maps.shape()[0],
        feature_maps.shape()[1],
        feature_maps.shape()[2],
    );
    if alphas.len() != k {
        return Err(Error::InvalidArgument(format!(
            "{} alphas for {k} feature maps",
            alphas.len()
        )));
    }
    let data = feature_maps.data();
    let mut out = vec![0.0; h * w];
    for (c, &alpha) in alphas.iter().enumerate() {
        if alpha == 0.0 {
            continue;
        }
        for cell in 0..h * w {
            out[cell] += alpha * data[c * h * w + cell];
        }
    }
    for v in &mut out {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Tensor::from_vec(vec![h, w], out)
}

/// Corner-aligned bilinear upsampling of a rank-2 map. Target dimensions
/// must be at least the source dimensions.
pub fn upsample_heatmap(raw: &Tensor, height: usize, width: usize) -> Result<Tensor> {
    if raw.rank() != 2 {
        return Err(Error::InvalidArgument(format!(
            "heatmap must be rank 2, got shape {:?}",
            raw.shape()
        )));
    }
    let (h, w) = (raw.shape()[0], raw.shape()[1]);
    if height < h || width < w {
        return Err(Error::InvalidArgument(format!(
            "refusing to downsample a {h}x{w} map to {height}x{width}"
        )));
    }
    let data = raw.data();
    let scale = |out: usize, target: usize, source: usize| -> f64 {
        if target <= 1 {
            0.0
        } else {
            out as f64 * (source - 1) as f64 / (target - 1) as f64
        }
    };
    let mut out = Vec::with_capacity(height * width);
    for i in 0..height {
        let sy = scale(i, height, h);
        let y0 = math::floor(sy) as usize;
        let y1 = (y0 + 1).min(h - 1);
        let fy = sy - y0 as f64;
        for j in 0..width {
            let sx = scale(j, width, w);
            let x0 = math::floor(sx) as usize;
            let x1 = (x0 + 1).min(w - 1);
            let fx = sx - x0 as f64;
            let v = data[y0 * w + x0] * (1.0 - fy) * (1.0 - fx)
                + data[y0 * w + x1] * (1.0 - fy) * fx
                + data[y1 * w + x0] * fy * (1.0 - fx)
                + data[y1 * w + x1] * fy * fx;
            out.push(v);
        }
    }
    Tensor::from_vec(vec![height, width], out)
}

/// Full Grad-CAM pipeline on a [`SmallCnn`]: forward pass, class-score
/// gradient at the last conv layer, alphas, heatmap, upsample to input
/// resolution. Deterministic.
pub fn explain_gradcam(
    model: &SmallCnn,
    image: &Tensor,
    class_index: usize,
) -> Result<GradCamHeatmap> {
    let (_, feature_maps) = model.forward_with_activations(image)?;
    let target = feature_maps.last().expect("SmallCnn has a conv layer");
    let gradients = model.grad_wrt_feature_maps(image, class_index)?;
    let alphas = gradcam_alphas(&gradients)?;
    let raw = gradcam_heatmap(target, &alphas)?;
    let shape = model.input_shape();
    let upsampled = upsample_heatmap(&raw, shape[1], shape[2])?;
    Ok(GradCamHeatmap {
        raw,
        upsampled,
        class_index,
        alphas,
    })
}
