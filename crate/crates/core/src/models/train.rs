//! Deterministic mini-batch SGD.
//!
//! The optimizer is deliberately plain: seeded shuffle, fixed batch order,
//! one learning rate, no momentum. Given the same seed, the same model, and
//! the same data, training is bit-identical.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::data::{pca_fit, pca_transform, Dataset, Sample};
use crate::error::{Error, Result};
use crate::rng;
use crate::tensor::Tensor;

use super::{
    bce_loss, EpochStats, LogisticModel, PcaLogisticModel, Predictor, TrainHistory,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            learning_rate: 0.1,
            batch_size: 16,
            seed: 42,
        }
    }
}

/// A model SGD can optimize: parameters are exposed as one flat vector and
/// the model reports the mean batch loss with its gradient.
pub trait Trainable: Predictor {
    fn parameters(&self) -> Vec<f64>;
    fn set_parameters(&mut self, params: &[f64]) -> Result<()>;
    fn loss_and_gradient(&self, images: &[&Tensor], labels: &[u8]) -> Result<(f64, Vec<f64>)>;
}

/// Trains `model` by mini-batch SGD on the binary cross-entropy loss.
///
/// The history records one entry per completed epoch, evaluated on the
/// post-update parameters. Non-finite losses, gradients, or parameters abort
/// with the epoch index.
pub fn train_sgd<M: Trainable>(
    mut model: M,
    train: &Dataset,
    val: &Dataset,
    config: &TrainConfig,
) -> Result<(M, TrainHistory)> {
    if train.is_empty() {
        return Err(Error::Empty {
            what: "training set",
        });
    }
    if val.is_empty() {
        return Err(Error::Empty {
            what: "validation set",
        });
    }
    if config.batch_size == 0 {
        return Err(Error::InvalidArgument(String::from(
            "batch size must be at least 1",
        )));
    }
    if !config.learning_rate.is_finite() || config.learning_rate < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "learning rate must be finite and non-negative, got {}",
            config.learning_rate
        )));
    }

    let mut shuffle_rng = rng::stream(config.seed, "sgd/shuffle");
    let mut indices: Vec<usize> = (0..train.len()).collect();
    let mut history = TrainHistory::default();

    for epoch in 1..=config.epochs {
        indices.shuffle(&mut shuffle_rng);
        for batch in indices.chunks(config.batch_size) {
            let images: Vec<&Tensor> = batch.iter().map(|&i| &train.samples[i].image).collect();
            let labels: Vec<u8> = batch.iter().map(|&i| train.samples[i].label).collect();
            let (loss, grad) = model
                .loss_and_gradient(&images, &labels)
                .map_err(|e| diverged_if_nonfinite(e, epoch))?;
            if !loss.is_finite() || !grad.iter().all(|g| g.is_finite()) {
                return Err(Error::TrainingDiverged { epoch });
            }
            let mut params = model.parameters();
            for (p, g) in params.iter_mut().zip(grad.iter()) {
                *p -= config.learning_rate * g;
            }
            if !params.iter().all(|p| p.is_finite()) {
                return Err(Error::TrainingDiverged { epoch });
            }
            model.set_parameters(&params)?;
        }
        let (train_loss, train_accuracy) =
            evaluate(&model, train).map_err(|e| diverged_if_nonfinite(e, epoch))?;
        let (val_loss, val_accuracy) =
            evaluate(&model, val).map_err(|e| diverged_if_nonfinite(e, epoch))?;
        history.epochs.push(EpochStats {
            epoch,
            train_loss,
            train_accuracy,
            val_loss,
            val_accuracy,
        });
    }
    Ok((model, history))
}

fn diverged_if_nonfinite(e: Error, epoch: usize) -> Error {
    match e {
        Error::NonFinite(_) => Error::TrainingDiverged { epoch },
        other => other,
    }
}

/// Mean BCE loss and argmax accuracy of `model` over `dataset`.
pub fn evaluate<P: Predictor + ?Sized>(model: &P, dataset: &Dataset) -> Result<(f64, f64)> {
    let mut p1 = Vec::with_capacity(dataset.len());
    let mut correct = 0usize;
    for sample in &dataset.samples {
        let probs = model.predict(&sample.image)?;
        p1.push(probs[1]);
        if model.predict_label(&sample.image)? == sample.label as usize {
            correct += 1;
        }
    }
    let loss = bce_loss(&p1, &dataset.labels())?;
    Ok((loss, correct as f64 / dataset.len() as f64))
}

/// Trains a plain logistic regression on the flattened images.
pub fn train_logistic(
    name: impl Into<String>,
    train: &Dataset,
    val: &Dataset,
    config: &TrainConfig,
) -> Result<(LogisticModel, TrainHistory)> {
    if train.is_empty() {
        return Err(Error::Empty {
            what: "training set",
        });
    }
    let model = LogisticModel::zeros(name, train.samples[0].image.len());
    train_sgd(model, train, val, config)
}

/// Fits PCA on the training images only, then trains a logistic regression
/// on the projected scores. The returned predictor applies the projection
/// itself, so it consumes raw images like every other model.
pub fn train_pca_logistic(
    name: impl Into<String>,
    train: &Dataset,
    val: &Dataset,
    config: &TrainConfig,
    components: usize,
) -> Result<(PcaLogisticModel, TrainHistory)> {
    let name = name.into();
    let pca = pca_fit(&train.to_matrix()?, components)?;
    let project = |ds: &Dataset| -> Result<Dataset> {
        let scores = pca_transform(&pca, &ds.to_matrix()?)?;
        let k = pca.component_count();
        let samples = ds
            .samples
            .iter()
            .enumerate()
            .map(|(i, s)| {
                Ok(Sample {
                    image: Tensor::from_vec(
                        alloc::vec![k],
                        scores.data()[i * k..(i + 1) * k].to_vec(),
                    )?,
                    label: s.label,
                    id: s.id.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(samples, ds.class_names.clone())
    };
    let feature_train = project(train)?;
    let feature_val = project(val)?;
    let logistic = LogisticModel::zeros(format!("{name}/logistic"), components);
    let (logistic, history) = train_sgd(logistic, &feature_train, &feature_val, config)?;
    Ok((PcaLogisticModel::new(name, pca, logistic)?, history))
}
