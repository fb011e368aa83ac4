//! Shapley-value feature attribution over segment coalitions.
//!
//! The coalition game's value function is the predictor's probability for
//! the explained class on the image with a subset of segments enabled and
//! the rest at the baseline. Exact attribution enumerates all `2^n` subsets
//! (capped at n = 16); larger games use an unbiased Monte-Carlo estimator
//! over random feature permutations. Subset values are memoized by bitmask,
//! so no coalition is evaluated twice.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use core::cell::RefCell;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lime::{mask_image, SegmentMask};
use crate::math;
use crate::models::Predictor;
use crate::rng;
use crate::tensor::Tensor;

/// Hard cap on exact enumeration: `2^16` value calls.
pub const EXACT_FEATURE_CAP: usize = 16;

/// A value function over subsets of `n` features, memoized by bitmask.
pub struct CoalitionGame<'a> {
    n: usize,
    value_fn: Box<dyn Fn(u32) -> Result<f64> + 'a>,
    cache: RefCell<BTreeMap<u32, f64>>,
}

impl<'a> CoalitionGame<'a> {
    /// `value_fn` receives the coalition as a bitmask (bit i = feature i
    /// present) and must be a pure function of it.
    pub fn new(n: usize, value_fn: impl Fn(u32) -> Result<f64> + 'a) -> Result<Self> {
        if n == 0 || n > 32 {
            return Err(Error::InvalidArgument(format!(
                "feature count must be in 1..=32, got {n}"
            )));
        }
        Ok(Self {
            n,
            value_fn: Box::new(value_fn),
            cache: RefCell::new(BTreeMap::new()),
        })
    }

    pub fn feature_count(&self) -> usize {
        self.n
    }

    pub fn full_mask(&self) -> u32 {
        if self.n == 32 {
            u32::MAX
        } else {
            (1u32 << self.n) - 1
        }
    }

    /// Memoized coalition value.
    pub fn value(&self, mask: u32) -> Result<f64> {
        if let Some(&v) = self.cache.borrow().get(&mask) {
            return Ok(v);
        }
        let v = (self.value_fn)(mask)?;
        self.cache.borrow_mut().insert(mask, v);
        Ok(v)
    }

    /// Number of distinct coalitions evaluated so far.
    pub fn evaluations(&self) -> usize {
        self.cache.borrow().len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapMethod {
    Exact,
    Sampled,
}

/// Per-feature attributions plus the game anchors they decompose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapExplanation {
    pub phi: Vec<f64>,
    /// v(empty set): the prediction with every feature at baseline.
    pub baseline_value: f64,
    /// v(all features): the prediction on the intact input.
    pub full_value: f64,
    pub method: ShapMethod,
    /// Standard error per feature; sampled mode only.
    pub stderr: Option<Vec<f64>>,
    /// Exact: subsets evaluated. Sampled: permutations drawn.
    pub sample_count: usize,
}

/// Exact Shapley values by enumerating every coalition:
/// `phi_i = sum_{S not containing i} |S|!(n-|S|-1)!/n! [v(S+i) - v(S)]`.
///
/// Subset weights use log-factorials, evaluated once per subset size.
pub fn exact_shapley(game: &CoalitionGame<'_>) -> Result<ShapExplanation> {
    let n = game.feature_count();
    if n > EXACT_FEATURE_CAP {
        return Err(Error::TooManyFeatures {
            n,
            cap: EXACT_FEATURE_CAP,
        });
    }
    let ln_n_fact = math::ln_factorial(n);
    let weights: Vec<f64> = (0..n)
        .map(|s| math::exp(math::ln_factorial(s) + math::ln_factorial(n - s - 1) - ln_n_fact))
        .collect();

    let mut phi = vec![0.0; n];
    let full = game.full_mask();
    for mask in 0..=full {
        let v_mask = game.value(mask)?;
        let size = mask.count_ones() as usize;
        for i in 0..n {
            let bit = 1u32 << i;
            if mask & bit != 0 {
                continue;
            }
            let v_with = game.value(mask | bit)?;
            phi[i] += weights[size] * (v_with - v_mask);
        }
    }
    Ok(ShapExplanation {
        phi,
        baseline_value: game.value(0)?,
        full_value: game.value(full)?,
        method: ShapMethod::Exact,
        stderr: None,
        sample_count: game.evaluations(),
    })
}

/// Monte-Carlo Shapley: for each sampled permutation, each feature's
/// marginal contribution when inserted in permutation order is one sample
/// of its attribution. Unbiased, deterministic given the seed.
pub fn sampled_shapley(
    game: &CoalitionGame<'_>,
    n_permutations: usize,
    seed: u64,
) -> Result<ShapExplanation> {
    if n_permutations == 0 {
        return Err(Error::InvalidArgument(String::from(
            "need at least one permutation",
        )));
    }
    let n = game.feature_count();
    let mut rng = rng::stream(seed, "shap/permutations");
    let mut order: Vec<usize> = (0..n).collect();
    // Welford accumulators per feature.
    let mut mean = vec![0.0; n];
    let mut m2 = vec![0.0; n];
    for round in 1..=n_permutations {
        order.shuffle(&mut rng);
        let mut mask = 0u32;
        let mut prev = game.value(0)?;
        for &feature in &order {
            mask |= 1u32 << feature;
            let cur = game.value(mask)?;
            let marginal = cur - prev;
            prev = cur;
            let delta = marginal - mean[feature];
            mean[feature] += delta / round as f64;
            m2[feature] += delta * (marginal - mean[feature]);
        }
    }
    let m = n_permutations as f64;
    let stderr: Vec<f64> = m2
        .iter()
        .map(|&s| {
            if n_permutations > 1 {
                math::sqrt(s / (m - 1.0) / m)
            } else {
                0.0
            }
        })
        .collect();
    Ok(ShapExplanation {
        phi: mean,
        baseline_value: game.value(0)?,
        full_value: game.value(game.full_mask())?,
        method: ShapMethod::Sampled,
        stderr: Some(stderr),
        sample_count: n_permutations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapMode {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapConfig {
    pub class_index: usize,
    /// Pixel value for segments outside the coalition.
    pub baseline: f64,
    pub mode: ShapMode,
    /// Permutation budget for sampled mode.
    pub budget: usize,
    pub seed: u64,
}

impl Default for ShapConfig {
    fn default() -> Self {
        Self {
            class_index: 1,
            baseline: 0.0,
            mode: ShapMode::Exact,
            budget: 2000,
            seed: 42,
        }
    }
}

/// Builds the segment-coalition game for `predictor` on `image` and runs
/// the requested attribution.
pub fn explain_shap(
    predictor: &dyn Predictor,
    image: &Tensor,
    mask: &SegmentMask,
    config: &ShapConfig,
) -> Result<ShapExplanation> {
    if config.class_index >= predictor.class_count() {
        return Err(Error::ClassOutOfRange {
            index: config.class_index,
            count: predictor.class_count(),
        });
    }
    let s = mask.segment_count();
    let game = CoalitionGame::new(s, |bits: u32| {
        let enabled: Vec<bool> = (0..s).map(|i| bits & (1 << i) != 0).collect();
        let masked = mask_image(image, mask, &enabled, config.baseline)?;
        Ok(predictor.predict(&masked)?[config.class_index])
    })?;
    match config.mode {
        ShapMode::Exact => exact_shapley(&game),
        ShapMode::Sampled => sampled_shapley(&game, config.budget, config.seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lime::segment_image;

    fn additive_game(coefficients: &[f64], base: f64) -> CoalitionGame<'_> {
        let n = coefficients.len();
        CoalitionGame::new(n, move |mask: u32| {
            let mut v = base;
            for (i, c) in coefficients.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    v += c;
                }
            }
            Ok(v)
        })
        .unwrap()
    }

    #[test]
    fn additive_game_recovers_coefficients() {
        let c = [0.3, -0.1];
        let game = additive_game(&c, 0.4);
        let ex = exact_shapley(&game).unwrap();
        assert!((ex.phi[0] - 0.3).abs() < 1e-12);
        assert!((ex.phi[1] + 0.1).abs() < 1e-12);
        assert!((ex.baseline_value - 0.4).abs() < 1e-15);
        assert!((ex.full_value - 0.6).abs() < 1e-12);
        // Every subset evaluated exactly once.
        assert_eq!(ex.sample_count, 4);
    }

    #[test]
    fn exact_matches_bruteforce_two_features() {
        // Direct enumeration with rational weights 1/2 for both subset
        // sizes of n = 2.
        let (v00, v10, v01, v11) = (0.2, 0.55, 0.35, 0.9);
        let game = CoalitionGame::new(2, move |m: u32| {
            Ok(match m {
                0b00 => v00,
                0b01 => v10,
                0b10 => v01,
                _ => v11,
            })
        })
        .unwrap();
        let ex = exact_shapley(&game).unwrap();
        let phi0 = 0.5 * (v10 - v00) + 0.5 * (v11 - v01);
        let phi1 = 0.5 * (v01 - v00) + 0.5 * (v11 - v10);
        assert!((ex.phi[0] - phi0).abs() < 1e-12);
        assert!((ex.phi[1] - phi1).abs() < 1e-12);
    }

    #[test]
    fn symmetric_features_get_equal_shares() {
        let game = CoalitionGame::new(2, |m: u32| {
            Ok(match m.count_ones() {
                0 => 0.2,
                1 => 0.5,
                _ => 0.6,
            })
        })
        .unwrap();
        let ex = exact_shapley(&game).unwrap();
        assert!((ex.phi[0] - ex.phi[1]).abs() < 1e-12);
    }

    #[test]
    fn dummy_feature_is_exactly_zero() {
        // Feature 2 never changes the value.
        let game = CoalitionGame::new(3, |m: u32| {
            let reduced = m & 0b011;
            Ok(0.1 + 0.2 * (reduced & 1) as f64 + 0.15 * ((reduced >> 1) & 1) as f64)
        })
        .unwrap();
        let ex = exact_shapley(&game).unwrap();
        assert_eq!(ex.phi[2], 0.0);
    }

    #[test]
    fn efficiency_axiom_holds() {
        // Deterministic pseudo-random game on 6 features.
        let mut values = alloc::collections::BTreeMap::new();
        let mut state: u64 = 987654321;
        for mask in 0u32..64 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            values.insert(mask, (state >> 11) as f64 / (1u64 << 53) as f64);
        }
        let game = CoalitionGame::new(6, move |m: u32| Ok(values[&m])).unwrap();
        let ex = exact_shapley(&game).unwrap();
        let total: f64 = ex.phi.iter().sum();
        assert!((total - (ex.full_value - ex.baseline_value)).abs() < 1e-9);
    }

    #[test]
    fn cap_is_enforced() {
        let game = CoalitionGame::new(17, |_| Ok(0.0)).unwrap();
        assert!(matches!(
            exact_shapley(&game),
            Err(Error::TooManyFeatures { n: 17, cap: 16 })
        ));
    }

    #[test]
    fn sampled_additive_is_exact_with_zero_stderr() {
        let c = [0.25, -0.4, 0.1];
        let game = additive_game(&c, 0.5);
        let ex = sampled_shapley(&game, 16, 7).unwrap();
        for (got, want) in ex.phi.iter().zip(c.iter()) {
            assert!((got - want).abs() < 1e-12);
        }
        for s in ex.stderr.unwrap() {
            assert!(s < 1e-12);
        }
    }

    #[test]
    fn sampled_is_deterministic_per_seed() {
        let game = CoalitionGame::new(5, |m: u32| {
            Ok((m.count_ones() as f64).sin().abs() * 0.3 + 0.1 * (m & 1) as f64)
        })
        .unwrap();
        let a = sampled_shapley(&game, 200, 11).unwrap();
        let b = sampled_shapley(&game, 200, 11).unwrap();
        assert_eq!(a.phi, b.phi);
        let c = sampled_shapley(&game, 200, 12).unwrap();
        assert_ne!(a.phi, c.phi);
    }

    #[test]
    fn sampled_converges_to_exact() {
        // Fixed pseudo-random 5-feature game; estimator within 5 standard
        // errors of the exact values.
        let mut values = alloc::collections::BTreeMap::new();
        let mut state: u64 = 13579;
        for mask in 0u32..32 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(99);
            values.insert(mask, (state >> 11) as f64 / (1u64 << 53) as f64);
        }
        let game = CoalitionGame::new(5, move |m: u32| Ok(values[&m])).unwrap();
        let exact = exact_shapley(&game).unwrap();
        let sampled = sampled_shapley(&game, 800, 3).unwrap();
        let stderr = sampled.stderr.as_ref().unwrap();
        for i in 0..5 {
            let diff = (sampled.phi[i] - exact.phi[i]).abs();
            assert!(
                diff <= 5.0 * stderr[i] + 1e-12,
                "feature {i}: diff {diff} vs stderr {}",
                stderr[i]
            );
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
            Ok(vec![0.35, 0.65])
        }
    }

    /// Probability 0.9 when segment 3 is bright, 0.1 otherwise.
    struct Segment3Indicator {
        mask: SegmentMask,
    }

    impl Predictor for Segment3Indicator {
        fn name(&self) -> &str {
            "segment3"
        }

        fn class_count(&self) -> usize {
            2
        }

        fn predict(&self, input: &Tensor) -> Result<Vec<f64>> {
            let mut sum = 0.0;
            let mut count = 0usize;
            for row in 0..self.mask.height() {
                for col in 0..self.mask.width() {
                    if self.mask.label_at(row, col) == 3 {
                        sum += input.get(&[0, row, col]);
                        count += 1;
                    }
                }
            }
            let p = if sum / count as f64 > 0.5 { 0.9 } else { 0.1 };
            Ok(vec![1.0 - p, p])
        }
    }

    #[test]
    fn constant_predictor_has_no_attribution() {
        let image = Tensor::filled(&[1, 8, 8], 0.8);
        let mask = segment_image(&image, 2).unwrap();
        let ex = explain_shap(&ConstantPredictor, &image, &mask, &ShapConfig::default()).unwrap();
        assert!(ex.phi.iter().all(|&p| p == 0.0));
        assert_eq!(ex.full_value, ex.baseline_value);
    }

    #[test]
    fn indicator_concentrates_on_its_segment() {
        let image = Tensor::filled(&[1, 8, 8], 0.9);
        let mask = segment_image(&image, 2).unwrap();
        let predictor = Segment3Indicator { mask: mask.clone() };
        let config = ShapConfig {
            baseline: 0.1,
            ..ShapConfig::default()
        };
        let ex = explain_shap(&predictor, &image, &mask, &config).unwrap();
        // Only segment 3 is non-dummy; efficiency pins its share.
        assert!((ex.phi[3] - (ex.full_value - ex.baseline_value)).abs() < 1e-12);
        assert!((ex.phi[3] - 0.8).abs() < 1e-12);
        for i in [0usize, 1, 2] {
            assert_eq!(ex.phi[i], 0.0);
        }
    }

    #[test]
    fn exact_and_sampled_agree_on_four_segments() {
        let image = gradient_image();
        let mask = segment_image(&image, 2).unwrap();
        let predictor = MeanIntensityPredictor;
        let exact_cfg = ShapConfig {
            baseline: 0.05,
            ..ShapConfig::default()
        };
        let exact = explain_shap(&predictor, &image, &mask, &exact_cfg).unwrap();
        let sampled_cfg = ShapConfig {
            mode: ShapMode::Sampled,
            budget: 5000,
            ..exact_cfg
        };
        let sampled = explain_shap(&predictor, &image, &mask, &sampled_cfg).unwrap();
        let stderr = sampled.stderr.as_ref().unwrap();
        for i in 0..4 {
            let diff = (sampled.phi[i] - exact.phi[i]).abs();
            assert!(diff <= 3.0 * stderr[i] + 1e-12, "segment {i}");
        }
    }

    struct MeanIntensityPredictor;

    impl Predictor for MeanIntensityPredictor {
        fn name(&self) -> &str {
            "mean"
        }

        fn class_count(&self) -> usize {
            2
        }

        fn predict(&self, input: &Tensor) -> Result<Vec<f64>> {
            let p = input.mean();
            Ok(vec![1.0 - p, p])
        }
    }

    fn gradient_image() -> Tensor {
        let data: Vec<f64> = (0..64).map(|i| i as f64 / 63.0).collect();
        Tensor::from_vec(vec![1, 8, 8], data).unwrap()
    }

    #[test]
    fn class_index_is_validated() {
        let image = gradient_image();
        let mask = segment_image(&image, 2).unwrap();
        let config = ShapConfig {
            class_index: 9,
            ..ShapConfig::default()
        };
        assert!(matches!(
            explain_shap(&ConstantPredictor, &image, &mask, &config),
            Err(Error::ClassOutOfRange { .. })
        ));
    }
}
