//! End-to-end smoke test: synthetic data through training, voting, and all
//! three explainers.

use xmv_core::data::{make_synthetic_dataset_with_truth, split};
use xmv_core::ensemble::{ensemble_predict, WeightedConfig};
use xmv_core::gradcam::explain_gradcam;
use xmv_core::lime::{explain_lime, segment_image, LimeConfig};
use xmv_core::metrics::{confusion, prf1_accuracy, roc_auc};
use xmv_core::models::{
    evaluate, train_logistic, train_pca_logistic, train_sgd, Predictor, SmallCnn, TrainConfig,
};
use xmv_core::shap::{explain_shap, ShapConfig, ShapMode};

#[test]
fn synthetic_training_voting_and_explaining() {
    let (dataset, truths) = make_synthetic_dataset_with_truth(60, 20, 7).unwrap();
    let (train, val) = split(&dataset, 0.8, 7).unwrap();
    assert_eq!(train.len() + val.len(), dataset.len());

    let quick = TrainConfig {
        epochs: 60,
        learning_rate: 0.5,
        batch_size: 16,
        seed: 7,
    };
    let (logistic, _) = train_logistic("logistic", &train, &val, &quick).unwrap();
    let (pca_logistic, _) = train_pca_logistic("pca_logistic", &train, &val, &quick, 8).unwrap();
    let cnn_config = TrainConfig {
        epochs: 8,
        learning_rate: 0.05,
        batch_size: 16,
        seed: 7,
    };
    let cnn = SmallCnn::reference("cnn", [1, 20, 20], 7).unwrap();
    let (cnn, history) = train_sgd(cnn, &train, &val, &cnn_config).unwrap();
    assert_eq!(history.len(), 8);

    // Individual models separate the classes.
    for (name, acc) in [
        ("logistic", evaluate(&logistic, &val).unwrap().1),
        ("pca_logistic", evaluate(&pca_logistic, &val).unwrap().1),
        ("cnn", evaluate(&cnn, &val).unwrap().1),
    ] {
        assert!(acc >= 0.9, "{name} reached only {acc}");
    }

    // Ensemble voting over the validation set.
    let models: Vec<&dyn Predictor> = vec![&logistic, &pca_logistic, &cnn];
    let mut preds = Vec::new();
    let mut scores = Vec::new();
    for sample in &val.samples {
        let record = ensemble_predict(&models, &sample.image, &sample.id, None).unwrap();
        assert_eq!(record.votes.len(), 3);
        assert!(!record.tie_broken); // odd number of binary voters
        preds.push(record.final_label);
        scores.push(record.tallies["1"] / 3.0);
    }
    let labels: Vec<usize> = val.samples.iter().map(|s| s.label as usize).collect();
    let cm = confusion(&preds, &labels, 1).unwrap();
    let report = prf1_accuracy(&cm);
    assert!(report.accuracy >= 0.9, "{report:?}");
    let (_, auc) = roc_auc(&scores, &labels).unwrap();
    assert!(auc >= 0.9, "auc {auc}");

    // Weighted voting agrees with uniform when weights are equal.
    let config = WeightedConfig::new(vec![2.0, 2.0, 2.0]).unwrap();
    for sample in val.samples.iter().take(5) {
        let uniform = ensemble_predict(&models, &sample.image, &sample.id, None).unwrap();
        let weighted =
            ensemble_predict(&models, &sample.image, &sample.id, Some(&config)).unwrap();
        assert_eq!(uniform.final_label, weighted.final_label);
    }

    // Explain one correctly classified tumor image with all three methods.
    let sample = val
        .samples
        .iter()
        .find(|s| s.label == 1 && cnn.predict_label(&s.image).unwrap() == 1)
        .expect("a correctly classified tumor image");
    let baseline = dataset.mean_intensity();

    let lime_config = LimeConfig {
        grid_size: 4,
        n_samples: 80,
        baseline,
        ..LimeConfig::default()
    };
    let lime_a = explain_lime(&cnn, &sample.image, &lime_config).unwrap();
    let lime_b = explain_lime(&cnn, &sample.image, &lime_config).unwrap();
    assert_eq!(lime_a, lime_b);
    assert_eq!(lime_a.coefficients.len(), 16);

    let mask = segment_image(&sample.image, 3).unwrap();
    let shap_config = ShapConfig {
        baseline,
        mode: ShapMode::Exact,
        ..ShapConfig::default()
    };
    let shap = explain_shap(&cnn, &sample.image, &mask, &shap_config).unwrap();
    let total: f64 = shap.phi.iter().sum();
    assert!((total - (shap.full_value - shap.baseline_value)).abs() < 1e-9);

    let cam = explain_gradcam(&cnn, &sample.image, 1).unwrap();
    assert!(cam.raw.data().iter().all(|&v| v >= 0.0));
    assert_eq!(cam.upsampled.shape(), &[20, 20]);

    // The trained detector looks at the lesions: on most correctly
    // classified tumor images the Grad-CAM peak falls inside the
    // ground-truth bounding box.
    let mut tested = 0;
    let mut hits = 0;
    for s in val.samples.iter().filter(|s| s.label == 1) {
        if cnn.predict_label(&s.image).unwrap() != 1 {
            continue;
        }
        tested += 1;
        let cam = explain_gradcam(&cnn, &s.image, 1).unwrap();
        let flat = cam.upsampled.argmax();
        let idx = dataset.samples.iter().position(|d| d.id == s.id).unwrap();
        if truths[idx].as_ref().unwrap().bbox_contains(flat / 20, flat % 20) {
            hits += 1;
        }
    }
    assert!(tested >= 5, "only {tested} tumor images classified correctly");
    assert!(
        hits * 10 >= tested * 7,
        "localization too weak: {hits}/{tested}"
    );
}
