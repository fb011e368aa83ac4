//! Majority and weighted voting over black-box predictors.
//!
//! Votes are hard labels: each model's argmax. The final label is the class
//! with the greatest (optionally weighted) vote mass, and every tie —
//! whether in a single model's probabilities or across tallies — resolves
//! to the lowest class index, so voting is deterministic and independent of
//! model order.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Predictor;
use crate::tensor::Tensor;

/// Per-model classifier weights for the weighted vote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedConfig {
    weights: Vec<f64>,
}

impl WeightedConfig {
    /// Weights must be finite and non-negative, with at least one strictly
    /// positive.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Empty { what: "weights" });
        }
        if !weights.iter().all(|w| w.is_finite() && *w >= 0.0) {
            return Err(Error::InvalidArgument(alloc::format!(
                "weights must be finite and non-negative, got {weights:?}"
            )));
        }
        if weights.iter().all(|&w| w == 0.0) {
            return Err(Error::AllZeroWeights);
        }
        Ok(Self { weights })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(alloc::vec![1.0; n])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// One model's contribution to a vote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelVote {
    pub model: String,
    pub label: usize,
    pub probs: Vec<f64>,
}

/// Complete record of one ensemble decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteRecord {
    pub input_id: String,
    pub votes: Vec<ModelVote>,
    /// Vote mass per class label (weighted sum; plain counts under uniform
    /// weights). Keys are stringified labels for JSON stability.
    pub tallies: BTreeMap<String, f64>,
    #[serde(rename = "final")]
    pub final_label: usize,
    pub tie_broken: bool,
}

/// Most frequent label; ties resolve to the lowest class index.
pub fn majority_vote(labels: &[usize]) -> Result<usize> {
    if labels.is_empty() {
        return Err(Error::Empty { what: "vote labels" });
    }
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_insert(0) += 1;
    }
    // Ascending key order, strict improvement: the lowest label wins ties.
    let mut best = (usize::MAX, 0usize);
    for (&label, &count) in &counts {
        if count > best.1 {
            best = (label, count);
        }
    }
    Ok(best.0)
}

/// Label with the largest summed classifier weight; reduces to
/// [`majority_vote`] when all weights are equal. Ties resolve to the lowest
/// class index.
pub fn weighted_vote(labels: &[usize], config: &WeightedConfig) -> Result<usize> {
    if labels.len() != config.len() {
        return Err(Error::InvalidArgument(alloc::format!(
            "{} labels vs {} weights",
            labels.len(),
            config.len()
        )));
    }
    let tallies = weighted_tallies(labels, config.weights());
    Ok(winning_label(&tallies).0)
}

/// Sums weights per label. Addends are accumulated in sorted order, so the
/// tallies do not depend on the order models are listed in.
fn weighted_tallies(labels: &[usize], weights: &[f64]) -> BTreeMap<usize, f64> {
    let mut addends: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (&label, &w) in labels.iter().zip(weights.iter()) {
        addends.entry(label).or_default().push(w);
    }
    addends
        .into_iter()
        .map(|(label, mut ws)| {
            ws.sort_unstable_by(f64::total_cmp);
            (label, ws.iter().sum::<f64>())
        })
        .collect()
}

/// Winner plus whether the maximum tally was shared.
fn winning_label(tallies: &BTreeMap<usize, f64>) -> (usize, bool) {
    let mut best_label = usize::MAX;
    let mut best = f64::NEG_INFINITY;
    let mut shared = false;
    for (&label, &mass) in tallies {
        if mass > best {
            best = mass;
            best_label = label;
            shared = false;
        } else if mass == best {
            shared = true;
        }
    }
    (best_label, shared)
}

/// Runs every model on `input`, tallies their argmax votes (weighted if a
/// config is given, uniform otherwise), and records the decision.
pub fn ensemble_predict(
    models: &[&dyn Predictor],
    input: &Tensor,
    input_id: &str,
    config: Option<&WeightedConfig>,
) -> Result<VoteRecord> {
    if models.is_empty() {
        return Err(Error::Empty { what: "model list" });
    }
    let class_count = models[0].class_count();
    if models.iter().any(|m| m.class_count() != class_count) {
        return Err(Error::InconsistentClassCounts(
            models.iter().map(|m| m.class_count()).collect(),
        ));
    }
    let uniform;
    let config = match config {
        Some(c) => c,
        None => {
            uniform = WeightedConfig::uniform(models.len())?;
            &uniform
        }
    };
    if config.len() != models.len() {
        return Err(Error::InvalidArgument(alloc::format!(
            "{} models vs {} weights",
            models.len(),
            config.len()
        )));
    }

    let mut votes = Vec::with_capacity(models.len());
    let mut labels = Vec::with_capacity(models.len());
    for model in models {
        let probs = model.predict(input).map_err(|e| Error::ModelFailure {
            model: model.name().to_string(),
            source: Box::new(e),
        })?;
        let label = argmax_lowest(&probs);
        labels.push(label);
        votes.push(ModelVote {
            model: model.name().to_string(),
            label,
            probs,
        });
    }

    let mut tallies = weighted_tallies(&labels, config.weights());
    for class in 0..class_count {
        tallies.entry(class).or_insert(0.0);
    }
    let (final_label, tie_broken) = winning_label(&tallies);
    Ok(VoteRecord {
        input_id: input_id.to_string(),
        votes,
        tallies: tallies
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
        final_label,
        tie_broken,
    })
}

fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}
