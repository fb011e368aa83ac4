//! Crate-wide error type.

use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by tensor arithmetic, model inference/training, explainers,
/// and metric computation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {left:?} vs {right:?} in {op}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("matmul inner dimensions differ: {left:?} x {right:?}")]
    MatmulDimMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("axis {axis} out of range for rank-{rank} tensor")]
    AxisOutOfRange { axis: usize, rank: usize },

    #[error("{what} must be non-empty")]
    Empty { what: &'static str },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value produced in {0}")]
    NonFinite(&'static str),

    #[error("label {0} is not binary (expected 0 or 1)")]
    NonBinaryLabel(f64),

    #[error("class index {index} out of range for {count} classes")]
    ClassOutOfRange { index: usize, count: usize },

    #[error("models disagree on class count: {0:?}")]
    InconsistentClassCounts(Vec<usize>),

    #[error("all ensemble weights are zero")]
    AllZeroWeights,

    #[error("model '{model}' failed: {source}")]
    ModelFailure {
        model: String,
        #[source]
        source: alloc::boxed::Box<Error>,
    },

    #[error("layer {layer}: {message}")]
    LayerShape { layer: usize, message: String },

    #[error("training diverged at epoch {epoch}: non-finite loss")]
    TrainingDiverged { epoch: usize },

    #[error("normal equations are singular; raise n-samples or the ridge lambda")]
    SingularSystem,

    #[error("{n} features exceed the exact-Shapley cap of {cap}; use sampled_shapley")]
    TooManyFeatures { n: usize, cap: usize },

    #[error("input has zero variance; principal components are undefined")]
    ZeroVariance,
}

pub type Result<T> = core::result::Result<T, Error>;
