//! Classifier abstractions and reference models.
//!
//! [`Predictor`] is the black-box contract the ensemble and the explainers
//! work against: an input tensor goes in, a probability vector comes out.
//! Two reference families implement it — a logistic-regression model
//! (optionally behind a PCA projection) and [`SmallCnn`], a from-scratch
//! convolutional network with manual backpropagation that exposes the
//! feature maps and gradients Grad-CAM needs.

mod cnn;
mod logistic;
mod loss;
mod train;

pub use cnn::{ConvLayer, DenseLayer, Head, SmallCnn};
pub use logistic::{LogisticModel, PcaLogisticModel};
pub use loss::{bce_loss, bce_per_class, PROB_EPSILON};
pub use train::{
    evaluate, train_logistic, train_pca_logistic, train_sgd, TrainConfig, Trainable,
};

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::tensor::Tensor;

/// A classifier mapping an input tensor to class probabilities.
///
/// Implementations own their preprocessing: the input is always the raw
/// image tensor, and the probabilities are each in `[0, 1]` and sum to 1
/// within 1e-9.
pub trait Predictor {
    fn name(&self) -> &str;
    fn class_count(&self) -> usize;
    fn predict(&self, input: &Tensor) -> Result<Vec<f64>>;

    /// Argmax class label for `input`; ties resolve to the lowest index.
    fn predict_label(&self, input: &Tensor) -> Result<usize> {
        let probs = self.predict(input)?;
        let mut best = 0;
        for (i, &p) in probs.iter().enumerate() {
            if p > probs[best] {
                best = i;
            }
        }
        Ok(best)
    }
}

/// Post-epoch training and validation statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

/// One entry per completed epoch.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
}

impl TrainHistory {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn final_val_accuracy(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.val_accuracy)
    }
}
