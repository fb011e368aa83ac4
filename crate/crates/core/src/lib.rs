//! Explainable majority-voting classification toolkit.
//!
//! Everything in this crate is deterministic given an explicit seed and free
//! of I/O: tensors, reference models with manual backpropagation, the
//! majority/weighted voting ensemble, three explanation methods (LIME,
//! Shapley attribution, Grad-CAM), binary classification metrics, PCA, and a
//! seeded synthetic dataset generator. File formats, dataset loading, and the
//! command-line front end live in the companion `xmv-cli` crate.
//!
//! The crate is `no_std` (with `alloc`); all float math goes through [`math`]
//! so results are identical whether or not the host links `std`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod data;
pub mod ensemble;
pub mod error;
pub mod gradcam;
pub mod lime;
pub mod linalg;
pub mod math;
pub mod metrics;
pub mod models;
pub mod rng;
pub mod shap;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::Tensor;
