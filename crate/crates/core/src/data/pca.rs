//! Principal component analysis on row-sample matrices.
//!
//! Dimensions up to 64 use a full Jacobi eigendecomposition of the sample
//! covariance; larger problems use power iteration with deflation and
//! per-iteration re-orthogonalization, which keeps the returned components
//! orthonormal to machine precision even when convergence is slow.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg;
use crate::math;
use crate::tensor::Tensor;

/// Threshold between the dense eigendecomposition and power iteration.
const FULL_EIGEN_MAX_DIM: usize = 64;
const POWER_MAX_ITERS: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    /// Per-dimension mean of the training matrix.
    pub mean: Vec<f64>,
    /// Principal directions as rows, `[k, d]`, pairwise orthonormal. The
    /// largest-magnitude entry of each row is positive (first on ties), so
    /// fits of the same data are bit-comparable.
    pub components: Tensor,
    /// Covariance eigenvalue per component, non-increasing.
    pub explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn component_count(&self) -> usize {
        self.components.shape()[0]
    }

    pub fn input_dim(&self) -> usize {
        self.components.shape()[1]
    }

    /// Projects a single vector: `(x - mean) . components^T`.
    pub fn transform_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let d = self.input_dim();
        if x.len() != d {
            return Err(Error::InvalidArgument(alloc::format!(
                "input has {} dims, PCA model expects {}",
                x.len(),
                d
            )));
        }
        let comp = self.components.data();
        let mut out = Vec::with_capacity(self.component_count());
        for k in 0..self.component_count() {
            let row = &comp[k * d..(k + 1) * d];
            let mut s = 0.0;
            for j in 0..d {
                s += (x[j] - self.mean[j]) * row[j];
            }
            out.push(s);
        }
        Ok(out)
    }
}

/// Fits PCA to an `[n, d]` matrix, keeping the top `k` components of the
/// unbiased sample covariance.
pub fn pca_fit(matrix: &Tensor, k: usize) -> Result<PcaModel> {
    if matrix.rank() != 2 {
        return Err(Error::InvalidArgument(alloc::format!(
            "pca_fit expects a rank-2 matrix, got shape {:?}",
            matrix.shape()
        )));
    }
    let n = matrix.shape()[0];
    let d = matrix.shape()[1];
    if n < 2 {
        return Err(Error::InvalidArgument(alloc::format!(
            "pca_fit needs at least 2 samples, got {n}"
        )));
    }
    if k == 0 || k > n.saturating_sub(1).min(d) {
        return Err(Error::InvalidArgument(alloc::format!(
            "component count {k} not in 1..=min(n-1, d) = {}",
            (n - 1).min(d)
        )));
    }

    let x = matrix.data();
    let mut mean = vec![0.0; d];
    for row in 0..n {
        for j in 0..d {
            mean[j] += x[row * d + j];
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }

    // Sample covariance, d x d.
    let mut cov = vec![0.0; d * d];
    for row in 0..n {
        for i in 0..d {
            let xi = x[row * d + i] - mean[i];
            if xi == 0.0 {
                continue;
            }
            for j in i..d {
                cov[i * d + j] += xi * (x[row * d + j] - mean[j]);
            }
        }
    }
    let denom = (n - 1) as f64;
    for i in 0..d {
        for j in i..d {
            let v = cov[i * d + j] / denom;
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }
    let trace: f64 = (0..d).map(|i| cov[i * d + i]).sum();
    if trace <= 1e-300 {
        return Err(Error::ZeroVariance);
    }

    let (mut values, mut vectors) = if d <= FULL_EIGEN_MAX_DIM {
        let (vals, vecs) = linalg::symmetric_eigen(&cov, d);
        (vals[..k].to_vec(), vecs[..k].to_vec())
    } else {
        power_iteration_topk(cov, d, k, trace)
    };

    // Covariance is PSD; clip the tiny negatives numerics can produce.
    for v in &mut values {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    for vec_k in &mut vectors {
        fix_sign(vec_k);
    }

    let mut comp_data = Vec::with_capacity(k * d);
    for v in &vectors {
        comp_data.extend_from_slice(v);
    }
    Ok(PcaModel {
        mean,
        components: Tensor::from_vec(vec![k, d], comp_data)?,
        explained_variance: values,
    })
}

/// Projects an `[n, d]` matrix to `[n, k]` principal-component scores.
pub fn pca_transform(model: &PcaModel, matrix: &Tensor) -> Result<Tensor> {
    if matrix.rank() != 2 || matrix.shape()[1] != model.input_dim() {
        return Err(Error::InvalidArgument(alloc::format!(
            "matrix shape {:?} does not match PCA input dim {}",
            matrix.shape(),
            model.input_dim()
        )));
    }
    let n = matrix.shape()[0];
    let d = model.input_dim();
    let k = model.component_count();
    let mut out = Vec::with_capacity(n * k);
    for row in 0..n {
        let projected = model.transform_vec(&matrix.data()[row * d..(row + 1) * d])?;
        out.extend_from_slice(&projected);
    }
    Tensor::from_vec(vec![n, k], out)
}

/// Largest-magnitude entry made positive; first such entry wins ties.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if math::abs(*x) > math::abs(v[best]) {
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Top-k eigenpairs by power iteration with deflation. Each candidate is
/// re-orthogonalized against accepted components on every iteration.
fn power_iteration_topk(
    mut cov: Vec<f64>,
    d: usize,
    k: usize,
    scale: f64,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut values = Vec::with_capacity(k);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    // Fixed LCG start vectors: deterministic, and almost surely not
    // orthogonal to the dominant eigenvector.
    let mut lcg: u64 = 0x9e37_79b9_7f4a_7c15;
    let mut next = || {
        lcg = lcg.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (lcg >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    for _ in 0..k {
        let mut v: Vec<f64> = (0..d).map(|_| next()).collect();
        orthogonalize(&mut v, &vectors);
        normalize(&mut v);
        let mut lambda = 0.0;
        for _ in 0..POWER_MAX_ITERS {
            let mut w = mat_vec(&cov, d, &v);
            orthogonalize(&mut w, &vectors);
            let norm = linalg::norm(&w);
            if norm <= 1e-18 * scale.max(1.0) {
                // Exhausted the covariance rank: keep the current direction
                // with zero variance.
                lambda = 0.0;
                break;
            }
            for x in &mut w {
                *x /= norm;
            }
            let new_lambda = rayleigh(&cov, d, &w);
            let moved: f64 = v
                .iter()
                .zip(w.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
            v = w;
            let settled = math::abs(new_lambda - lambda) <= 1e-13 * new_lambda.max(1e-300);
            lambda = new_lambda;
            if settled && math::sqrt(moved) <= 1e-10 {
                break;
            }
        }
        // Deflate so the next component sees the residual covariance.
        for i in 0..d {
            for j in 0..d {
                cov[i * d + j] -= lambda * v[i] * v[j];
            }
        }
        values.push(lambda);
        vectors.push(v);
    }
    (values, vectors)
}

fn mat_vec(m: &[f64], d: usize, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; d];
    for i in 0..d {
        out[i] = linalg::dot(&m[i * d..(i + 1) * d], v);
    }
    out
}

fn rayleigh(m: &[f64], d: usize, v: &[f64]) -> f64 {
    linalg::dot(&mat_vec(m, d, v), v)
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let c = linalg::dot(v, b);
        for (x, y) in v.iter_mut().zip(b.iter()) {
            *x -= c * y;
        }
    }
}

fn normalize(v: &mut [f64]) {
    let n = linalg::norm(v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[&[f64]]) -> Tensor {
        let d = rows[0].len();
        let data: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Tensor::from_vec(vec![rows.len(), d], data).unwrap()
    }

    #[test]
    fn axis_aligned_variances() {
        // Four points with sample variances exactly (4, 1) and zero
        // covariance: (+-sqrt6, 0), (0, +-sqrt1.5).
        let s6 = 2.449489742783178_f64;
        let s15 = 1.224744871391589_f64;
        let m = matrix(&[&[s6, 0.0], &[-s6, 0.0], &[0.0, s15], &[0.0, -s15]]);
        let model = pca_fit(&m, 2).unwrap();
        assert!((model.explained_variance[0] - 4.0).abs() < 1e-9);
        assert!((model.explained_variance[1] - 1.0).abs() < 1e-9);
        // Sign rule: +e1 then +e2.
        assert!((model.components.get(&[0, 0]) - 1.0).abs() < 1e-9);
        assert!(model.components.get(&[0, 1]).abs() < 1e-9);
        assert!((model.components.get(&[1, 1]) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rank_one_line_through_origin() {
        let m = matrix(&[&[0.0, 0.0], &[1.0, 1.0], &[2.0, 2.0], &[-1.0, -1.0]]);
        let model = pca_fit(&m, 2).unwrap();
        assert!(model.explained_variance[0] > 1.0);
        assert!(model.explained_variance[1].abs() < 1e-12);
    }

    #[test]
    fn mean_shift_invariance() {
        let base = matrix(&[&[1.0, 2.0], &[3.0, -1.0], &[0.5, 0.0], &[2.0, 4.0]]);
        let shifted = base.add_scalar(10.0).unwrap();
        let a = pca_fit(&base, 2).unwrap();
        let b = pca_fit(&shifted, 2).unwrap();
        for i in 0..a.components.len() {
            assert!((a.components.data()[i] - b.components.data()[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn transform_of_mean_is_zero() {
        let m = matrix(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 0.0]]);
        let model = pca_fit(&m, 2).unwrap();
        let z = model.transform_vec(&model.mean.clone()).unwrap();
        assert!(z.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn full_rank_round_trip() {
        let m = matrix(&[&[1.0, 2.0], &[3.0, -1.0], &[0.0, 0.5], &[2.0, 2.5]]);
        let model = pca_fit(&m, 2).unwrap();
        let reduced = pca_transform(&model, &m).unwrap();
        // Reconstruct: x = mean + scores . components.
        let comp = model.components.data();
        for row in 0..4 {
            for j in 0..2 {
                let mut rec = model.mean[j];
                for k in 0..2 {
                    rec += reduced.get(&[row, k]) * comp[k * 2 + j];
                }
                assert!((rec - m.get(&[row, j])).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn three_point_projection_fixture() {
        // Points on the line y = x: principal direction (1,1)/sqrt2;
        // projections of (0,0),(1,1),(2,2) are -sqrt2, 0, +sqrt2.
        let m = matrix(&[&[0.0, 0.0], &[1.0, 1.0], &[2.0, 2.0]]);
        let model = pca_fit(&m, 1).unwrap();
        let proj = pca_transform(&model, &m).unwrap();
        let s2 = 1.414213562373095_f64;
        assert!((proj.get(&[0, 0]) + s2).abs() < 1e-9);
        assert!(proj.get(&[1, 0]).abs() < 1e-12);
        assert!((proj.get(&[2, 0]) - s2).abs() < 1e-9);
        assert!((model.explained_variance[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn power_iteration_path_matches_structure() {
        // 80-dim data (> FULL_EIGEN_MAX_DIM) with variance concentrated on
        // the first two axes.
        let n = 40;
        let d = 80;
        let mut data = vec![0.0; n * d];
        let mut lcg: u64 = 12345;
        let mut next = || {
            lcg = lcg.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (lcg >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for r in 0..n {
            data[r * d] = 10.0 * next();
            data[r * d + 1] = 3.0 * next();
            for j in 2..d {
                data[r * d + j] = 0.01 * next();
            }
        }
        let m = Tensor::from_vec(vec![n, d], data).unwrap();
        let model = pca_fit(&m, 3).unwrap();
        // First component concentrates on axis 0.
        assert!(model.components.get(&[0, 0]).abs() > 0.99);
        // Orthonormal within 1e-8.
        let comp = model.components.data();
        for a in 0..3 {
            for b in 0..3 {
                let dot: f64 = (0..d).map(|j| comp[a * d + j] * comp[b * d + j]).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-8, "pair ({a},{b})");
            }
        }
        // Explained variance non-increasing.
        assert!(model.explained_variance[0] >= model.explained_variance[1]);
        assert!(model.explained_variance[1] >= model.explained_variance[2]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = matrix(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert!(pca_fit(&m, 2).is_err()); // k > n-1
        assert!(pca_fit(&m, 0).is_err());
        let constant = matrix(&[&[1.0, 1.0], &[1.0, 1.0], &[1.0, 1.0]]);
        assert!(matches!(pca_fit(&constant, 1), Err(Error::ZeroVariance)));
    }

    #[test]
    fn transform_dimension_mismatch() {
        let m = matrix(&[&[1.0, 2.0], &[3.0, 4.0], &[0.0, 1.0]]);
        let model = pca_fit(&m, 1).unwrap();
        let wrong = matrix(&[&[1.0, 2.0, 3.0]]);
        assert!(pca_transform(&model, &wrong).is_err());
    }
}
