//! In-memory datasets, deterministic stratified splitting, PCA, and the
//! seeded synthetic image generator. Loading datasets from disk lives in the
//! companion crate; everything here is pure computation.

mod pca;
mod synthetic;

pub use pca::{pca_fit, pca_transform, PcaModel};
pub use synthetic::{make_synthetic_dataset, make_synthetic_dataset_with_truth, EllipseTruth};

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::math;
use crate::rng;
use crate::tensor::Tensor;

/// One labeled image.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Pixel data, shape `[channels, height, width]`, values in `[0, 1]`.
    pub image: Tensor,
    /// Binary class label; 1 is the positive ("tumor") class.
    pub label: u8,
    pub id: String,
}

/// A set of uniformly shaped samples with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    /// Names indexed by label: `class_names[0]` is the negative class.
    pub class_names: [String; 2],
}

impl Dataset {
    pub fn new(samples: Vec<Sample>, class_names: [String; 2]) -> Result<Self> {
        let mut ids = BTreeSet::new();
        for s in &samples {
            if s.label > 1 {
                return Err(Error::NonBinaryLabel(s.label as f64));
            }
            if !ids.insert(s.id.as_str()) {
                return Err(Error::InvalidArgument(alloc::format!(
                    "duplicate sample id '{}'",
                    s.id
                )));
            }
            if s.image.shape() != samples[0].image.shape() {
                return Err(Error::InvalidArgument(alloc::format!(
                    "sample '{}' has shape {:?}, expected {:?}",
                    s.id,
                    s.image.shape(),
                    samples[0].image.shape()
                )));
            }
        }
        Ok(Self {
            samples,
            class_names,
        })
    }

    pub fn default_class_names() -> [String; 2] {
        [String::from("non_tumor"), String::from("tumor")]
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.samples.iter().map(|s| s.label).collect()
    }

    /// Mean pixel intensity over the whole dataset; the default LIME/SHAP
    /// baseline value. 0 for an empty dataset.
    pub fn mean_intensity(&self) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for s in &self.samples {
            sum += s.image.sum();
            count += s.image.len();
        }
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }

    /// Flattens every image into a row of an `[n, pixels]` matrix.
    pub fn to_matrix(&self) -> Result<Tensor> {
        if self.is_empty() {
            return Err(Error::Empty { what: "dataset" });
        }
        let d = self.samples[0].image.len();
        let mut data = Vec::with_capacity(self.len() * d);
        for s in &self.samples {
            data.extend_from_slice(s.image.data());
        }
        Tensor::from_vec(alloc::vec![self.len(), d], data)
    }
}

/// Stratified train/validation split.
///
/// Each class contributes `round(fraction * class_size)` samples to the
/// training set, chosen by a seeded shuffle. Within each output set, samples
/// keep their original dataset order, so reruns with the same seed are
/// identical and the two sets partition the input.
pub fn split(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(alloc::format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let mut train_indices = Vec::new();
    let mut val_indices = Vec::new();
    for class in 0..=1u8 {
        let mut members: Vec<usize> = dataset
            .samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.label == class)
            .map(|(i, _)| i)
            .collect();
        if members.len() < 2 {
            return Err(Error::InvalidArgument(alloc::format!(
                "class {} has {} sample(s); need at least 2 to split",
                class,
                members.len()
            )));
        }
        let take = math::round(train_fraction * members.len() as f64) as usize;
        let mut rng = rng::stream(seed, &alloc::format!("split/class/{class}"));
        members.shuffle(&mut rng);
        train_indices.extend_from_slice(&members[..take]);
        val_indices.extend_from_slice(&members[take..]);
    }
    train_indices.sort_unstable();
    val_indices.sort_unstable();
    let subset = |indices: &[usize]| {
        Dataset::new(
            indices.iter().map(|&i| dataset.samples[i].clone()).collect(),
            dataset.class_names.clone(),
        )
    };
    Ok((subset(&train_indices)?, subset(&val_indices)?))
}
