//! Minimal dense n-dimensional array.
//!
//! Shapes are lists of positive dimension sizes; data is a flat row-major
//! `Vec<f64>`. Tensors are immutable from the caller's perspective: every
//! operation returns a new tensor, so sharing across threads is safe.
//!
//! Broadcasting is limited to scalars. Any operation that would produce a
//! NaN or infinity from finite inputs is rejected instead of propagating it.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// Builds a tensor from a shape and row-major data.
    ///
    /// Rejects empty/zero dimensions, length mismatches, and non-finite
    /// values.
    pub fn from_vec(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.iter().any(|&d| d == 0) {
            return Err(Error::InvalidArgument(alloc::format!(
                "dimensions must be positive, got {shape:?}"
            )));
        }
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(Error::InvalidArgument(alloc::format!(
                "data length {} does not match shape {:?} (= {} elements)",
                data.len(),
                shape,
                expected
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("tensor construction"));
        }
        Ok(Self { shape, data })
    }

    /// All-zero tensor of the given shape.
    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; len],
        }
    }

    /// Tensor of the given shape with every cell set to `value`.
    pub fn filled(shape: &[usize], value: f64) -> Self {
        let len = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![value; len],
        }
    }

    /// Rank-1 tensor from a slice.
    pub fn from_slice(values: &[f64]) -> Result<Self> {
        Self::from_vec(vec![values.len()], values.to_vec())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Reinterprets the data under a new shape of equal element count.
    pub fn reshape(&self, shape: Vec<usize>) -> Result<Self> {
        Self::from_vec(shape, self.data.clone())
    }

    /// Flat offset of a multi-index (row-major).
    fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.rank());
        let mut off = 0;
        for (i, &ix) in index.iter().enumerate() {
            debug_assert!(ix < self.shape[i]);
            off = off * self.shape[i] + ix;
        }
        off
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.offset(index)]
    }

    /// Applies `f` to every cell. The closure must map finite values to
    /// finite values; results are verified.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let data: Vec<f64> = self.data.iter().map(|&v| f(v)).collect();
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("map"));
        }
        Ok(Self {
            shape: self.shape.clone(),
            data,
        })
    }

    fn zip(&self, other: &Self, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                op,
                left: self.shape.clone(),
                right: other.shape.clone(),
            });
        }
        let data: Vec<f64> = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(&a, &b)| f(a, b))
            .collect();
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite(op));
        }
        Ok(Self {
            shape: self.shape.clone(),
            data,
        })
    }

    fn zip_scalar(&self, s: f64, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let data: Vec<f64> = self.data.iter().map(|&a| f(a, s)).collect();
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite(op));
        }
        Ok(Self {
            shape: self.shape.clone(),
            data,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, "sub", |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip(other, "mul", |a, b| a * b)
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        self.zip(other, "div", |a, b| a / b)
    }

    pub fn add_scalar(&self, s: f64) -> Result<Self> {
        self.zip_scalar(s, "add_scalar", |a, b| a + b)
    }

    pub fn mul_scalar(&self, s: f64) -> Result<Self> {
        self.zip_scalar(s, "mul_scalar", |a, b| a * b)
    }

    /// Standard rank-2 matrix product.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.rank() != 2 || other.rank() != 2 || self.shape[1] != other.shape[0] {
            return Err(Error::MatmulDimMismatch {
                left: self.shape.clone(),
                right: other.shape.clone(),
            });
        }
        let (m, k, n) = (self.shape[0], self.shape[1], other.shape[1]);
        let mut data = vec![0.0; m * n];
        for i in 0..m {
            for l in 0..k {
                let a = self.data[i * k + l];
                if a == 0.0 {
                    continue;
                }
                let row = &other.data[l * n..(l + 1) * n];
                let out = &mut data[i * n..(i + 1) * n];
                for (o, &b) in out.iter_mut().zip(row.iter()) {
                    *o += a * b;
                }
            }
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("matmul"));
        }
        Ok(Self {
            shape: vec![m, n],
            data,
        })
    }

    /// Sum of all cells.
    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Mean of all cells.
    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    /// Flat index of the maximum cell; exact ties pick the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.data.iter().enumerate() {
            if v > self.data[best] {
                best = i;
            }
        }
        best
    }

    /// Sums along `axis`, dropping it from the shape. Reducing a rank-1
    /// tensor yields a single-element rank-1 tensor.
    pub fn reduce_sum(&self, axis: usize) -> Result<Self> {
        self.reduce(axis, false)
    }

    /// Means along `axis`, dropping it from the shape.
    pub fn reduce_mean(&self, axis: usize) -> Result<Self> {
        self.reduce(axis, true)
    }

    fn reduce(&self, axis: usize, mean: bool) -> Result<Self> {
        if axis >= self.rank() {
            return Err(Error::AxisOutOfRange {
                axis,
                rank: self.rank(),
            });
        }
        let outer: usize = self.shape[..axis].iter().product();
        let mid = self.shape[axis];
        let inner: usize = self.shape[axis + 1..].iter().product();
        let mut data = vec![0.0; outer * inner];
        for o in 0..outer {
            for m in 0..mid {
                for i in 0..inner {
                    data[o * inner + i] += self.data[(o * mid + m) * inner + i];
                }
            }
        }
        if mean {
            for v in &mut data {
                *v /= mid as f64;
            }
        }
        let mut shape: Vec<usize> = self.shape.clone();
        shape.remove(axis);
        if shape.is_empty() {
            shape.push(1);
        }
        Ok(Self { shape, data })
    }

    /// Index of the maximum along `axis` for each lane, ties to the lowest
    /// index. The result has the reduced shape, flattened row-major.
    pub fn argmax_axis(&self, axis: usize) -> Result<Vec<usize>> {
        if axis >= self.rank() {
            return Err(Error::AxisOutOfRange {
                axis,
                rank: self.rank(),
            });
        }
        let outer: usize = self.shape[..axis].iter().product();
        let mid = self.shape[axis];
        let inner: usize = self.shape[axis + 1..].iter().product();
        let mut out = Vec::with_capacity(outer * inner);
        for o in 0..outer {
            for i in 0..inner {
                let mut best = 0;
                for m in 1..mid {
                    if self.data[(o * mid + m) * inner + i]
                        > self.data[(o * mid + best) * inner + i]
                    {
                        best = m;
                    }
                }
                out.push(best);
            }
        }
        Ok(out)
    }
}
