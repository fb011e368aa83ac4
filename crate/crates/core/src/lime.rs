//! Local surrogate explanations.
//!
//! The image is partitioned into a deterministic rectangular grid of
//! segments (the interpretable features). Binary on/off perturbations of
//! those segments are sampled around the instance, the predictor is queried
//! on each perturbed image, samples are weighted by proximity to the
//! original, and a weighted ridge regression fits a sparse local linear
//! model whose coefficients are the explanation.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::math;
use crate::models::Predictor;
use crate::rng;
use crate::tensor::Tensor;

/// Ridge strength is never allowed below this: it keeps the normal
/// equations positive-definite.
pub const MIN_RIDGE: f64 = 1e-8;

/// Per-pixel segment labels partitioning an image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentMask {
    labels: Vec<usize>,
    height: usize,
    width: usize,
    segment_count: usize,
}

impl SegmentMask {
    pub fn segment_count(&self) -> usize {
        self.segment_count
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn label_at(&self, row: usize, col: usize) -> usize {
        self.labels[row * self.width + col]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Pixel count of one segment.
    pub fn segment_size(&self, segment: usize) -> usize {
        self.labels.iter().filter(|&&l| l == segment).count()
    }
}

/// Sparse local linear model around one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimeExplanation {
    /// One coefficient per segment; segments outside `selected_segments`
    /// are exactly 0.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// The K retained features, ascending.
    pub selected_segments: Vec<usize>,
    /// Weighted goodness-of-fit of the refit surrogate.
    pub r_squared: f64,
    pub sample_count: usize,
    pub kernel_width: f64,
}

/// Partitions the spatial extent of `image` (rank 2 `[H, W]` or rank 3
/// `[C, H, W]`) into `grid_size` x `grid_size` rectangular segments. Edge
/// segments absorb the division remainder.
pub fn segment_image(image: &Tensor, grid_size: usize) -> Result<SegmentMask> {
    let (height, width) = spatial_dims(image)?;
    if grid_size == 0 {
        return Err(Error::InvalidArgument(String::from("grid size must be at least 1")));
    }
    if height < grid_size || width < grid_size {
        return Err(Error::InvalidArgument(format!(
            "image {height}x{width} is smaller than a {grid_size}x{grid_size} grid"
        )));
    }
    let band = |pos: usize, total: usize| -> usize {
        // Equal bands of total/grid, remainder swallowed by the last band.
        let size = total / grid_size;
        (pos / size).min(grid_size - 1)
    };
    let mut labels = Vec::with_capacity(height * width);
    for row in 0..height {
        for col in 0..width {
            labels.push(band(row, height) * grid_size + band(col, width));
        }
    }
    Ok(SegmentMask {
        labels,
        height,
        width,
        segment_count: grid_size * grid_size,
    })
}


fn spatial_dims(image: &Tensor) -> Result<(usize, usize)> {
    match image.rank() {
        2 => Ok((image.shape()[0], image.shape()[1])),
        3 => Ok((image.shape()[1], image.shape()[2])),
        r => Err(Error::InvalidArgument(format!(
            "expected a rank-2 or rank-3 image, got rank {r}"
        ))),
    }
}

/// Replaces every pixel of a disabled segment with `baseline`, across all
/// channels. Enabled segments keep the original pixels bit-exactly.
pub fn mask_image(
    image: &Tensor,
    mask: &SegmentMask,
    enabled: &[bool],
    baseline: f64,
) -> Result<Tensor> {
    let (height, width) = spatial_dims(image)?;
    if height != mask.height || width != mask.width {
        return Err(Error::ShapeMismatch {
            op: "mask_image",
            left: image.shape().to_vec(),
            right: vec![mask.height, mask.width],
        });
    }
    if enabled.len() != mask.segment_count {
        return Err(Error::InvalidArgument(format!(
            "{} segment states for {} segments",
            enabled.len(),
            mask.segment_count
        )));
    }
    let channels = if image.rank() == 3 { image.shape()[0] } else { 1 };
    let mut data = image.data().to_vec();
    for row in 0..height {
        for col in 0..width {
            if !enabled[mask.label_at(row, col)] {
                for c in 0..channels {
                    data[(c * height + row) * width + col] = baseline;
                }
            }
        }
    }
    Tensor::from_vec(image.shape().to_vec(), data)
}

/// Samples `n_samples` binary segment masks. Row 0 is all-ones (the
/// original instance); the rest are i.i.d. uniform bits from the seed.
/// Returns the mask matrix and the corresponding perturbed images.
pub fn sample_perturbations(
    mask: &SegmentMask,
    image: &Tensor,
    baseline: f64,
    n_samples: usize,
    seed: u64,
) -> Result<(Vec<Vec<bool>>, Vec<Tensor>)> {
    let s = mask.segment_count;
    if n_samples < s + 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least {} samples for {} segments, got {n_samples}",
            s + 2,
            s
        )));
    }
    let mut rng = rng::stream(seed, "lime/perturb");
    let mut rows = Vec::with_capacity(n_samples);
    rows.push(vec![true; s]);
    for _ in 1..n_samples {
        rows.push((0..s).map(|_| rng.gen::<bool>()).collect());
    }
    let mut images = Vec::with_capacity(n_samples);
    for row in &rows {
        images.push(mask_image(image, mask, row, baseline)?);
    }
    Ok((rows, images))
}

/// Exponential kernel on the fraction of disabled segments:
/// `w(z) = exp(-D^2 / sigma^2)` with `D = 1 - popcount(z)/S`.
pub fn proximity_weights(z_rows: &[Vec<bool>], kernel_width: f64) -> Result<Vec<f64>> {
    if !(kernel_width > 0.0) || !kernel_width.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "kernel width must be positive, got {kernel_width}"
        )));
    }
    z_rows
        .iter()
        .map(|row| {
            if row.is_empty() {
                return Err(Error::Empty { what: "mask row" });
            }
            let on = row.iter().filter(|&&b| b).count() as f64;
            let d = 1.0 - on / row.len() as f64;
            Ok(math::exp(-(d * d) / (kernel_width * kernel_width)))
        })
        .collect()
}

/// Solves the weighted ridge problem
/// `min_beta sum_i w_i (y_i - b0 - z_i . beta)^2 + lambda |beta|^2`
/// (intercept unpenalized), then enforces sparsity by keeping the
/// `top_k` largest-|beta| segments and refitting on them alone.
pub fn fit_local_model(
    z_rows: &[Vec<bool>],
    targets: &[f64],
    weights: &[f64],
    ridge_lambda: f64,
    top_k: usize,
    kernel_width: f64,
) -> Result<LimeExplanation> {
    if z_rows.is_empty() {
        return Err(Error::Empty { what: "perturbation matrix" });
    }
    let s = z_rows[0].len();
    if targets.len() != z_rows.len() || weights.len() != z_rows.len() {
        return Err(Error::InvalidArgument(format!(
            "{} rows vs {} targets vs {} weights",
            z_rows.len(),
            targets.len(),
            weights.len()
        )));
    }
    if ridge_lambda < 0.0 || !ridge_lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "ridge lambda must be non-negative, got {ridge_lambda}"
        )));
    }
    if top_k == 0 || top_k > s {
        return Err(Error::InvalidArgument(format!(
            "top-k must be in 1..={s}, got {top_k}"
        )));
    }
    let lambda = ridge_lambda.max(MIN_RIDGE);

    // First pass on all segments to rank them.
    let all: Vec<usize> = (0..s).collect();
    let (intercept, betas) = weighted_ridge(z_rows, targets, weights, &all, lambda)?;
    let mut ranked: Vec<usize> = (0..s).collect();
    ranked.sort_by(|&a, &b| {
        math::abs(betas[b])
            .total_cmp(&math::abs(betas[a]))
            .then(a.cmp(&b))
    });
    let mut selected: Vec<usize> = ranked[..top_k].to_vec();
    selected.sort_unstable();

    // Refit on the retained features alone; everything else is exactly 0.
    let (intercept, refit) = if top_k == s {
        (intercept, betas)
    } else {
        let (b0, b) = weighted_ridge(z_rows, targets, weights, &selected, lambda)?;
        // weighted_ridge returns betas indexed by position in `selected`.
        let mut full = vec![0.0; s];
        for (slot, &seg) in selected.iter().enumerate() {
            full[seg] = b[slot];
        }
        (b0, full)
    };

    let r_squared = weighted_r2(z_rows, targets, weights, intercept, &refit);
    Ok(LimeExplanation {
        coefficients: refit,
        intercept,
        selected_segments: selected,
        r_squared,
        sample_count: z_rows.len(),
        kernel_width,
    })
}

/// Weighted ridge over the given feature columns; returns the intercept and
/// one beta per entry of `columns`.
fn weighted_ridge(
    z_rows: &[Vec<bool>],
    targets: &[f64],
    weights: &[f64],
    columns: &[usize],
    lambda: f64,
) -> Result<(f64, Vec<f64>)> {
    let p = columns.len() + 1; // intercept first
    let mut a = vec![0.0; p * p];
    let mut b = vec![0.0; p];
    let mut x_row = vec![0.0; p];
    for ((row, &y), &w) in z_rows.iter().zip(targets.iter()).zip(weights.iter()) {
        x_row[0] = 1.0;
        for (j, &col) in columns.iter().enumerate() {
            x_row[j + 1] = if row[col] { 1.0 } else { 0.0 };
        }
        for i in 0..p {
            let wxi = w * x_row[i];
            if wxi == 0.0 {
                continue;
            }
            b[i] += wxi * y;
            for j in i..p {
                a[i * p + j] += wxi * x_row[j];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            a[i * p + j] = a[j * p + i];
        }
    }
    // Penalize the feature block only, never the intercept.
    for i in 1..p {
        a[i * p + i] += lambda;
    }
    let solution = linalg::solve_spd(&a, &b, p)?;
    Ok((solution[0], solution[1..].to_vec()))
}

fn weighted_r2(
    z_rows: &[Vec<bool>],
    targets: &[f64],
    weights: &[f64],
    intercept: f64,
    betas: &[f64],
) -> f64 {
    let w_sum: f64 = weights.iter().sum();
    let y_bar: f64 = targets
        .iter()
        .zip(weights.iter())
        .map(|(&y, &w)| w * y)
        .sum::<f64>()
        / w_sum;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for ((row, &y), &w) in z_rows.iter().zip(targets.iter()).zip(weights.iter()) {
        let mut pred = intercept;
        for (j, &on) in row.iter().enumerate() {
            if on {
                pred += betas[j];
            }
        }
        ss_res += w * (y - pred) * (y - pred);
        ss_tot += w * (y - y_bar) * (y - y_bar);
    }
    let scale = targets
        .iter()
        .zip(weights.iter())
        .map(|(&y, &w)| w * y * y)
        .sum::<f64>()
        .max(1e-300);
    if ss_tot <= 1e-12 * scale {
        // Constant target: perfect fit if the residual vanished too.
        if ss_res <= 1e-9 * scale {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    }
}

/// Everything [`explain_lime`] needs beyond the predictor and the image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimeConfig {
    pub grid_size: usize,
    pub n_samples: usize,
    pub kernel_width: f64,
    pub ridge_lambda: f64,
    pub top_k: usize,
    /// Class whose probability the surrogate explains.
    pub class_index: usize,
    /// Pixel value for disabled segments.
    pub baseline: f64,
    pub seed: u64,
}

impl Default for LimeConfig {
    fn default() -> Self {
        Self {
            grid_size: 7,
            n_samples: 300,
            kernel_width: 0.25,
            ridge_lambda: 1e-6,
            top_k: 10,
            class_index: 1,
            baseline: 0.0,
            seed: 42,
        }
    }
}

/// Full LIME pipeline: segment, perturb, query the predictor, weight by
/// proximity, fit the sparse local surrogate. Deterministic given the seed.
pub fn explain_lime(
    predictor: &dyn Predictor,
    image: &Tensor,
    config: &LimeConfig,
) -> Result<LimeExplanation> {
    if config.class_index >= predictor.class_count() {
        return Err(Error::ClassOutOfRange {
            index: config.class_index,
            count: predictor.class_count(),
        });
    }
    let mask = segment_image(image, config.grid_size)?;
    let top_k = config.top_k.min(mask.segment_count());
    let (z_rows, images) = sample_perturbations(
        &mask,
        image,
        config.baseline,
        config.n_samples,
        config.seed,
    )?;
    let mut targets = Vec::with_capacity(images.len());
    for img in &images {
        targets.push(predictor.predict(img)?[config.class_index]);
    }
    let weights = proximity_weights(&z_rows, config.kernel_width)?;
    fit_local_model(
        &z_rows,
        &targets,
        &weights,
        config.ridge_lambda,
        top_k,
        config.kernel_width,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Predictor;

    #[test]
    fn segment_grid_exact_division() {
        let mask = segment_image(&Tensor::zeros(&[1, 8, 8]), 2).unwrap();
        assert_eq!(mask.segment_count(), 4);
        for s in 0..4 {
            assert_eq!(mask.segment_size(s), 16);
        }
        assert_eq!(mask.label_at(0, 0), 0);
        assert_eq!(mask.label_at(0, 7), 1);
        assert_eq!(mask.label_at(7, 0), 2);
        assert_eq!(mask.label_at(7, 7), 3);
    }

    #[test]
    fn segment_grid_one_covers_everything() {
        let mask = segment_image(&Tensor::zeros(&[1, 5, 9]), 1).unwrap();
        assert_eq!(mask.segment_count(), 1);
        assert_eq!(mask.segment_size(0), 45);
    }

    #[test]
    fn segment_remainder_goes_to_last_band() {
        let mask = segment_image(&Tensor::zeros(&[1, 5, 5]), 2).unwrap();
        assert_eq!(mask.segment_count(), 4);
        // Bands of size {2, 3}: segment areas 4, 6, 6, 9.
        assert_eq!(mask.segment_size(0), 4);
        assert_eq!(mask.segment_size(1), 6);
        assert_eq!(mask.segment_size(2), 6);
        assert_eq!(mask.segment_size(3), 9);
        // Every segment id appears.
        for s in 0..4 {
            assert!(mask.segment_size(s) > 0);
        }
    }

    #[test]
    fn segment_rejects_small_images() {
        assert!(segment_image(&Tensor::zeros(&[1, 3, 3]), 4).is_err());
        assert!(segment_image(&Tensor::zeros(&[1, 3, 3]), 0).is_err());
    }

    fn gradient_image() -> Tensor {
        let data: Vec<f64> = (0..64).map(|i| i as f64 / 63.0).collect();
        Tensor::from_vec(vec![1, 8, 8], data).unwrap()
    }

    #[test]
    fn all_on_row_is_identity_and_all_off_is_baseline() {
        let image = gradient_image();
        let mask = segment_image(&image, 2).unwrap();
        let on = mask_image(&image, &mask, &[true; 4], 0.33).unwrap();
        assert_eq!(on, image);
        let off = mask_image(&image, &mask, &[false; 4], 0.33).unwrap();
        assert!(off.data().iter().all(|&v| v == 0.33));
    }

    #[test]
    fn perturbations_are_deterministic() {
        let image = gradient_image();
        let mask = segment_image(&image, 2).unwrap();
        let (z1, imgs1) = sample_perturbations(&mask, &image, 0.0, 10, 5).unwrap();
        let (z2, imgs2) = sample_perturbations(&mask, &image, 0.0, 10, 5).unwrap();
        assert_eq!(z1, z2);
        assert_eq!(imgs1, imgs2);
        assert!(z1[0].iter().all(|&b| b));
        assert_eq!(imgs1[0], image);
        let (z3, _) = sample_perturbations(&mask, &image, 0.0, 10, 6).unwrap();
        assert_ne!(z1[1..], z3[1..]);
    }

    #[test]
    fn perturbations_need_enough_samples() {
        let image = gradient_image();
        let mask = segment_image(&image, 2).unwrap();
        assert!(sample_perturbations(&mask, &image, 0.0, 5, 0).is_err());
    }

    #[test]
    fn proximity_fixtures() {
        let rows = vec![
            vec![true, true, true, true],
            vec![false, false, false, false],
            vec![true, true, false, false],
        ];
        let w = proximity_weights(&rows, 1.0).unwrap();
        assert_eq!(w[0], 1.0);
        assert!((w[1] - 0.36787944117144233).abs() < 1e-12);
        // Half-on at sigma = 0.5: exp(-0.25/0.25) = 1/e.
        let w = proximity_weights(&rows, 0.5).unwrap();
        assert!((w[2] - 0.36787944117144233).abs() < 1e-12);
        assert!(proximity_weights(&rows, 0.0).is_err());
        assert!(proximity_weights(&rows, -1.0).is_err());
    }

    #[test]
    fn weight_monotonicity() {
        let mut rows = Vec::new();
        for on in 0..=8usize {
            rows.push((0..8).map(|i| i < on).collect::<Vec<bool>>());
        }
        let w = proximity_weights(&rows, 0.7).unwrap();
        for pair in w.windows(2) {
            assert!(pair[1] >= pair[0]);
        }
    }

    /// Independent dense solver (Gauss-Jordan with partial pivoting) for the
    /// same weighted ridge normal equations; used as the closed-form oracle.
    fn wls_oracle(
        z_rows: &[Vec<bool>],
        y: &[f64],
        w: &[f64],
        lambda: f64,
    ) -> Vec<f64> {
        let s = z_rows[0].len();
        let p = s + 1;
        let mut a = vec![vec![0.0f64; p]; p];
        let mut b = vec![0.0f64; p];
        for ((row, &yi), &wi) in z_rows.iter().zip(y.iter()).zip(w.iter()) {
            let mut x = vec![1.0];
            x.extend(row.iter().map(|&v| if v { 1.0 } else { 0.0 }));
            for i in 0..p {
                b[i] += wi * x[i] * yi;
                for j in 0..p {
                    a[i][j] += wi * x[i] * x[j];
                }
            }
        }
        for i in 1..p {
            a[i][i] += lambda;
        }
        // Gauss-Jordan.
        for col in 0..p {
            let pivot = (col..p)
                .max_by(|&r1, &r2| a[r1][col].abs().total_cmp(&a[r2][col].abs()))
                .unwrap();
            a.swap(col, pivot);
            b.swap(col, pivot);
            let diag = a[col][col];
            for j in 0..p {
                a[col][j] /= diag;
            }
            b[col] /= diag;
            for r in 0..p {
                if r != col && a[r][col] != 0.0 {
                    let f = a[r][col];
                    for j in 0..p {
                        a[r][j] -= f * a[col][j];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
        b
    }

    fn linear_targets(z_rows: &[Vec<bool>]) -> Vec<f64> {
        // y = 0.1 + 0.5 z0 - 0.2 z1
        z_rows
            .iter()
            .map(|r| {
                0.1 + if r[0] { 0.5 } else { 0.0 } - if r[1] { 0.2 } else { 0.0 }
            })
            .collect()
    }

    #[test]
    fn exact_recovery_of_linear_model() {
        let image = gradient_image();
        let mask = segment_image(&image, 2).unwrap();
        let (z_rows, _) = sample_perturbations(&mask, &image, 0.0, 40, 3).unwrap();
        let y = linear_targets(&z_rows);
        let w = proximity_weights(&z_rows, 0.25).unwrap();
        let fit = fit_local_model(&z_rows, &y, &w, 1e-8, 4, 0.25).unwrap();
        assert!((fit.coefficients[0] - 0.5).abs() < 1e-3);
        assert!((fit.coefficients[1] + 0.2).abs() < 1e-3);
        assert!(fit.coefficients[2].abs() < 1e-3);
        assert!(fit.r_squared > 0.999999);
        // Against the independent closed-form solve, much tighter.
        let oracle = wls_oracle(&z_rows, &y, &w, 1e-8);
        assert!((fit.intercept - oracle[0]).abs() < 1e-6);
        for j in 0..4 {
            assert!((fit.coefficients[j] - oracle[j + 1]).abs() < 1e-6, "beta {j}");
        }
    }

    #[test]
    fn constant_targets_collapse_to_intercept() {
        let image = gradient_image();
        let mask = segment_image(&image, 2).unwrap();
        let (z_rows, _) = sample_perturbations(&mask, &image, 0.0, 30, 9).unwrap();
        let y = vec![0.42; z_rows.len()];
        let w = proximity_weights(&z_rows, 0.25).unwrap();
        let fit = fit_local_model(&z_rows, &y, &w, 1e-8, 4, 0.25).unwrap();
        assert!((fit.intercept - 0.42).abs() < 1e-9);
        for c in fit.coefficients {
            assert!(c.abs() < 1e-9);
        }
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn top_one_keeps_the_strongest_feature() {
        let image = gradient_image();
        let mask = segment_image(&image, 2).unwrap();
        let (z_rows, _) = sample_perturbations(&mask, &image, 0.0, 40, 3).unwrap();
        let y = linear_targets(&z_rows);
        let w = proximity_weights(&z_rows, 0.25).unwrap();
        let fit = fit_local_model(&z_rows, &y, &w, 1e-8, 1, 0.25).unwrap();
        assert_eq!(fit.selected_segments, vec![0]);
        assert!(fit.coefficients[1] == 0.0 && fit.coefficients[2] == 0.0);
        assert!(fit.coefficients[0].abs() > 0.3);
    }

    struct SegmentMeanPredictor {
        mask: SegmentMask,
        segment: usize,
    }

    impl Predictor for SegmentMeanPredictor {
        fn name(&self) -> &str {
            "segment-mean"
        }

        fn class_count(&self) -> usize {
            2
        }

        fn predict(&self, input: &Tensor) -> Result<Vec<f64>> {
            let mut sum = 0.0;
            let mut n = 0usize;
            for row in 0..self.mask.height() {
                for col in 0..self.mask.width() {
                    if self.mask.label_at(row, col) == self.segment {
                        sum += input.get(&[0, row, col]);
                        n += 1;
                    }
                }
            }
            let p = sum / n as f64;
            Ok(vec![1.0 - p, p])
        }
    }

    struct ConstantPredictor;

    impl Predictor for ConstantPredictor {
        fn name(&self) -> &str {
            "constant"
        }

        fn class_count(&self) -> usize {
            2
        }

        fn predict(&self, _input: &Tensor) -> Result<Vec<f64>> {
            Ok(vec![0.25, 0.75])
        }
    }

    #[test]
    fn constant_predictor_gets_zero_coefficients() {
        let image = gradient_image();
        let config = LimeConfig {
            grid_size: 2,
            n_samples: 30,
            top_k: 4,
            ..LimeConfig::default()
        };
        let fit = explain_lime(&ConstantPredictor, &image, &config).unwrap();
        for c in fit.coefficients {
            assert!(c.abs() < 1e-9);
        }
        assert!((fit.intercept - 0.75).abs() < 1e-9);
    }

    #[test]
    fn segment_mean_predictor_highlights_its_segment() {
        let image = Tensor::filled(&[1, 8, 8], 0.8);
        let mask = segment_image(&image, 2).unwrap();
        let predictor = SegmentMeanPredictor { mask, segment: 3 };
        let config = LimeConfig {
            grid_size: 2,
            n_samples: 40,
            top_k: 4,
            baseline: 0.1,
            ridge_lambda: 1e-8,
            ..LimeConfig::default()
        };
        let fit = explain_lime(&predictor, &image, &config).unwrap();
        let strongest = fit
            .coefficients
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap()
            .0;
        assert_eq!(strongest, 3);
        // The coefficient approximates the on/off probability jump.
        assert!((fit.coefficients[3] - 0.7).abs() < 1e-5);
    }

    #[test]
    fn explanations_are_deterministic_and_stable() {
        let image = gradient_image();
        let mask = segment_image(&image, 2).unwrap();
        let predictor = SegmentMeanPredictor { mask, segment: 1 };
        let config = LimeConfig {
            grid_size: 2,
            n_samples: 60,
            top_k: 4,
            ..LimeConfig::default()
        };
        let a = explain_lime(&predictor, &image, &config).unwrap();
        let b = explain_lime(&predictor, &image, &config).unwrap();
        assert_eq!(a, b);
        // A different seed still lands near the same closed-form optimum on
        // this linear predictor.
        let other = LimeConfig {
            seed: 43,
            ..config
        };
        let c = explain_lime(&predictor, &image, &other).unwrap();
        for (x, y) in a.coefficients.iter().zip(c.coefficients.iter()) {
            assert!((x - y).abs() < 1e-2);
        }
    }

    #[test]
    fn class_index_is_validated() {
        let image = gradient_image();
        let config = LimeConfig {
            grid_size: 2,
            n_samples: 30,
            class_index: 5,
            ..LimeConfig::default()
        };
        assert!(matches!(
            explain_lime(&ConstantPredictor, &image, &config),
            Err(Error::ClassOutOfRange { .. })
        ));
    }
}
