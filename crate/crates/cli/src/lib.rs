//! File formats, dataset IO, and report writers around `xmv-core`.
//!
//! Formats:
//! - NetPBM P5/P6 images (maxval 255), bit-exact on round trips.
//! - `TENSOR v1` blocks: an ASCII header line plus little-endian f64s.
//! - Model and PCA checkpoints: a one-line JSON manifest followed by
//!   concatenated `TENSOR v1` blocks.
//! - JSON reports and CSV tables for histories and ROC curves.

pub mod checkpoint;
pub mod dataset_io;
pub mod error;
pub mod pnm;
pub mod report;
pub mod tensor_file;

pub use error::{CliError, CliResult};
