//! Logistic-regression reference models.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::PcaModel;
use crate::error::{Error, Result};
use crate::math;
use crate::tensor::Tensor;

use super::{loss, Predictor, Trainable};

/// Plain logistic regression over the flattened input.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    name: String,
    weights: Vec<f64>,
    bias: f64,
}

impl LogisticModel {
    /// All-zero weights; logistic regression is convex, so a deterministic
    /// zero start is fine.
    pub fn zeros(name: impl Into<String>, input_dim: usize) -> Self {
        Self {
            name: name.into(),
            weights: vec![0.0; input_dim],
            bias: 0.0,
        }
    }

    pub fn from_parts(name: impl Into<String>, weights: Vec<f64>, bias: f64) -> Self {
        Self {
            name: name.into(),
            weights,
            bias,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn input_dim(&self) -> usize {
        self.weights.len()
    }

    fn logit(&self, input: &Tensor) -> Result<f64> {
        if input.len() != self.weights.len() {
            return Err(Error::InvalidArgument(format!(
                "model '{}' expects {} inputs, got {}",
                self.name,
                self.weights.len(),
                input.len()
            )));
        }
        let mut z = self.bias;
        for (w, x) in self.weights.iter().zip(input.data().iter()) {
            z += w * x;
        }
        Ok(z)
    }
}

impl Predictor for LogisticModel {
    fn name(&self) -> &str {
        &self.name
    }

    fn class_count(&self) -> usize {
        2
    }

    fn predict(&self, input: &Tensor) -> Result<Vec<f64>> {
        let p = math::sigmoid(self.logit(input)?);
        Ok(vec![1.0 - p, p])
    }
}

impl Trainable for LogisticModel {
    fn parameters(&self) -> Vec<f64> {
        let mut p = self.weights.clone();
        p.push(self.bias);
        p
    }

    fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.weights.len() + 1 {
            return Err(Error::InvalidArgument(format!(
                "expected {} parameters, got {}",
                self.weights.len() + 1,
                params.len()
            )));
        }
        let d = self.weights.len();
        self.weights.copy_from_slice(&params[..d]);
        self.bias = params[d];
        Ok(())
    }

    fn loss_and_gradient(&self, images: &[&Tensor], labels: &[u8]) -> Result<(f64, Vec<f64>)> {
        if images.len() != labels.len() || images.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "batch of {} images vs {} labels",
                images.len(),
                labels.len()
            )));
        }
        let n = images.len() as f64;
        let d = self.weights.len();
        let mut total_loss = 0.0;
        let mut grad = vec![0.0; d + 1];
        for (&image, &label) in images.iter().zip(labels.iter()) {
            let p = math::sigmoid(self.logit(image)?);
            total_loss += loss::bce_per_class(p, label)?;
            let delta = (p - label as f64) / n;
            for (g, x) in grad[..d].iter_mut().zip(image.data().iter()) {
                *g += delta * x;
            }
            grad[d] += delta;
        }
        Ok((total_loss / n, grad))
    }
}

/// Logistic regression on PCA scores: the image is flattened, projected by
/// the frozen PCA model, and classified. The projection is part of the
/// predictor, so callers always pass raw images.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaLogisticModel {
    name: String,
    pca: PcaModel,
    logistic: LogisticModel,
}

impl PcaLogisticModel {
    pub fn new(name: impl Into<String>, pca: PcaModel, logistic: LogisticModel) -> Result<Self> {
        if logistic.input_dim() != pca.component_count() {
            return Err(Error::InvalidArgument(format!(
                "logistic expects {} inputs but PCA yields {} components",
                logistic.input_dim(),
                pca.component_count()
            )));
        }
        Ok(Self {
            name: name.into(),
            pca,
            logistic,
        })
    }

    pub fn pca(&self) -> &PcaModel {
        &self.pca
    }

    pub fn logistic(&self) -> &LogisticModel {
        &self.logistic
    }
}

impl Predictor for PcaLogisticModel {
    fn name(&self) -> &str {
        &self.name
    }

    fn class_count(&self) -> usize {
        2
    }

    fn predict(&self, input: &Tensor) -> Result<Vec<f64>> {
        let features = self.pca.transform_vec(input.data())?;
        self.logistic.predict(&Tensor::from_slice(&features)?)
    }
}
