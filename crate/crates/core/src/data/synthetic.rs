//! Seeded synthetic image generator: textured-noise backgrounds, with a
//! bright ellipse added for the positive class. The ellipse location is
//! returned as ground truth so localization of explanations can be scored.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, Sample};
use crate::error::{Error, Result};
use crate::math;
use crate::rng;
use crate::tensor::Tensor;

const BACKGROUND_LOW: f64 = 0.08;
const BACKGROUND_SPAN: f64 = 0.30;
const LESION_BOOST: f64 = 0.55;

/// Ground truth for one generated tumor image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipseTruth {
    /// (row, col) center in pixels.
    pub center: (f64, f64),
    /// (row, col) semi-axes in pixels.
    pub semi_axes: (f64, f64),
    /// Inclusive bounding box (row0, col0, row1, col1).
    pub bbox: (usize, usize, usize, usize),
}

impl EllipseTruth {
    pub fn bbox_contains(&self, row: usize, col: usize) -> bool {
        let (r0, c0, r1, c1) = self.bbox;
        row >= r0 && row <= r1 && col >= c0 && col <= c1
    }
}

/// Like [`make_synthetic_dataset`] but also returns per-sample ground truth
/// (None for background-only images), aligned with `dataset.samples`.
pub fn make_synthetic_dataset_with_truth(
    n_per_class: usize,
    image_size: usize,
    seed: u64,
) -> Result<(Dataset, Vec<Option<EllipseTruth>>)> {
    if image_size < 8 {
        return Err(Error::InvalidArgument(format!(
            "image size must be at least 8, got {image_size}"
        )));
    }
    let mut samples = Vec::with_capacity(2 * n_per_class);
    let mut truths = Vec::with_capacity(2 * n_per_class);
    for i in 0..n_per_class {
        let mut rng = rng::stream(seed, &format!("synth/tumor/{i}"));
        let mut pixels = background(&mut rng, image_size);
        let truth = stamp_ellipse(&mut rng, &mut pixels, image_size);
        samples.push(Sample {
            image: Tensor::from_vec(alloc::vec![1, image_size, image_size], pixels)?,
            label: 1,
            id: format!("tumor_{i:04}"),
        });
        truths.push(Some(truth));
    }
    for i in 0..n_per_class {
        let mut rng = rng::stream(seed, &format!("synth/non_tumor/{i}"));
        let pixels = background(&mut rng, image_size);
        samples.push(Sample {
            image: Tensor::from_vec(alloc::vec![1, image_size, image_size], pixels)?,
            label: 0,
            id: format!("non_tumor_{i:04}"),
        });
        truths.push(None);
    }
    let dataset = Dataset::new(samples, Dataset::default_class_names())?;
    Ok((dataset, truths))
}

/// Deterministic two-class image set: `n_per_class` bright-ellipse images
/// (label 1, listed first) and `n_per_class` background-only images.
pub fn make_synthetic_dataset(n_per_class: usize, image_size: usize, seed: u64) -> Result<Dataset> {
    make_synthetic_dataset_with_truth(n_per_class, image_size, seed).map(|(ds, _)| ds)
}

fn background(rng: &mut impl Rng, size: usize) -> Vec<f64> {
    (0..size * size)
        .map(|_| BACKGROUND_LOW + BACKGROUND_SPAN * rng.gen::<f64>())
        .collect()
}

fn stamp_ellipse(rng: &mut impl Rng, pixels: &mut [f64], size: usize) -> EllipseTruth {
    let s = size as f64;
    // Semi-axes around 12-20% of the image side, center placed so the
    // ellipse stays inside the frame.
    let a_row = s * (0.12 + 0.08 * rng.gen::<f64>());
    let a_col = s * (0.12 + 0.08 * rng.gen::<f64>());
    let c_row = a_row + 1.0 + rng.gen::<f64>() * (s - 2.0 * a_row - 2.0);
    let c_col = a_col + 1.0 + rng.gen::<f64>() * (s - 2.0 * a_col - 2.0);
    for row in 0..size {
        for col in 0..size {
            let dr = (row as f64 - c_row) / a_row;
            let dc = (col as f64 - c_col) / a_col;
            if dr * dr + dc * dc <= 1.0 {
                let v = pixels[row * size + col] + LESION_BOOST;
                pixels[row * size + col] = if v > 1.0 { 1.0 } else { v };
            }
        }
    }
    let clamp = |v: f64| -> usize {
        let v = if v < 0.0 { 0.0 } else { v };
        let v = math::floor(v) as usize;
        v.min(size - 1)
    };
    EllipseTruth {
        center: (c_row, c_col),
        semi_axes: (a_row, a_col),
        bbox: (
            clamp(c_row - a_row),
            clamp(c_col - a_col),
            clamp(c_row + a_row + 1.0),
            clamp(c_col + a_col + 1.0),
        ),
    }
}
