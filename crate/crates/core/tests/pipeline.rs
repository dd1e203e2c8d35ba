//! Cross-module integration: CSV ingestion through training, persistence,
//! and prediction.

use nalgebra::DMatrix;

use csge_core::io::{
    import_external_predictions, load_csv, load_model, save_model, write_csv, CsvSchema,
};
use csge_core::{
    fit, fit_from_cube, CsgeConfig, Dataset, EstimatorSpec, ObjectiveConfig, Prediction,
    Scorer, Task, TrainingProtocol, WeightingConfig,
};

fn analytic_pair() -> Vec<EstimatorSpec> {
    vec![
        EstimatorSpec::AnalyticFunction { expr: "sin(x[0])".into() },
        EstimatorSpec::AnalyticFunction { expr: "sin(x[0]) + 10".into() },
    ]
}

fn synthetic_config() -> CsgeConfig {
    CsgeConfig {
        scorer: Scorer::AbsoluteError,
        objective: ObjectiveConfig {
            c_reg: 0.01,
            use_penalty_heuristic: false,
            ..Default::default()
        },
        weighting: WeightingConfig {
            n_dim: Some(1),
            neighbors: Some(5),
        },
        ..Default::default()
    }
}

#[test]
fn temporal_csv_to_model_to_disk() {
    // lead-time regime switch written as a long-form CSV
    let n = 80;
    let xs: Vec<f64> = (0..n).map(|i| 20.0 * i as f64 / (n - 1) as f64).collect();
    let features = DMatrix::from_column_slice(n, 1, &xs);
    let targets = DMatrix::from_fn(n, 4, |i, t| {
        if t >= 2 { xs[i].sin() + 10.0 } else { xs[i].sin() }
    });
    let data = Dataset::new(features, targets, vec!["x".into()], Task::Regression).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("temporal.csv");
    write_csv(&data, &csv_path).unwrap();

    let schema = CsvSchema {
        target: "target".into(),
        lead_time: Some("lead_time".into()),
        sample_id: Some("sample_id".into()),
        classification: false,
    };
    let loaded = load_csv(&csv_path, &schema).unwrap();
    assert_eq!(loaded.horizon(), 4);

    let model = fit(&analytic_pair(), &loaded, &synthetic_config()).unwrap();
    for t in 0..4 {
        let expected = if t >= 2 { 3.0f64.sin() + 10.0 } else { 3.0f64.sin() };
        let (prediction, breakdown) = model.predict(&[3.0], t).unwrap();
        assert!(
            (prediction.scalar() - expected).abs() < 0.1,
            "t = {t}: {} vs {expected}",
            prediction.scalar()
        );
        breakdown.check_invariants(1e-9).unwrap();
    }

    let model_path = dir.path().join("model.json");
    save_model(&model, &model_path).unwrap();
    let reloaded = load_model(&model_path).unwrap();
    for t in 0..4 {
        let (a, _) = model.predict(&[7.7], t).unwrap();
        let (b, _) = reloaded.predict(&[7.7], t).unwrap();
        assert_eq!(a.scalar().to_bits(), b.scalar().to_bits());
    }
}

#[test]
fn classification_pipeline_from_csv() {
    // three separable blobs along one axis, a second noisy feature
    let mut text = String::from("x,extra,label\n");
    for i in 0..90 {
        let class = i % 3;
        let x = class as f64 * 5.0 + (i as f64 * 0.37).sin() * 0.8;
        let extra = (i as f64 * 0.91).cos();
        text.push_str(&format!("{x},{extra},{class}\n"));
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("blobs.csv");
    std::fs::write(&path, text).unwrap();

    let data = load_csv(&path, &CsvSchema::classification("label")).unwrap();
    assert_eq!(data.task(), Task::Classification { n_classes: 3 });

    let specs = vec![
        EstimatorSpec::KnnClassifier { k: 5 },
        EstimatorSpec::DecisionTree {
            max_depth: 4,
            min_leaf_size: 1,
        },
    ];
    let config = CsgeConfig {
        scorer: Scorer::ZeroOneError,
        ..Default::default()
    };
    let model = fit(&specs, &data, &config).unwrap();

    let mut correct = 0;
    for (x, expected) in [(0.0, 0.0), (5.0, 1.0), (10.0, 2.0), (4.7, 1.0)] {
        let (prediction, breakdown) = model.predict(&[x, 0.0], 0).unwrap();
        breakdown.check_invariants(1e-9).unwrap();
        match &prediction {
            Prediction::Probabilities(p) => {
                assert_eq!(p.len(), 3);
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
            other => panic!("expected probabilities, got {other:?}"),
        }
        if prediction.scalar() == expected {
            correct += 1;
        }
    }
    assert_eq!(correct, 4, "separable blobs should classify cleanly");
}

#[test]
fn external_cube_analysis_matches_offsets() {
    // externally produced constant-offset predictions around y = x
    let n = 60;
    let mut text = String::from("sample_id,member_id,lead_time,prediction\n");
    for i in 0..n {
        let y = i as f64 * 0.5;
        text.push_str(&format!("{i},close,0,{}\n", y + 1.0));
        text.push_str(&format!("{i},far,0,{}\n", y + 4.0));
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("external.csv");
    std::fs::write(&path, text).unwrap();
    let cube = import_external_predictions(&path).unwrap();

    let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|x| x * 0.5).collect();
    let data = Dataset::regression(
        DMatrix::from_column_slice(n, 1, &xs),
        ys,
        vec!["x".into()],
    )
    .unwrap();

    let model = fit_from_cube(&cube, &data, &synthetic_config()).unwrap();
    assert_eq!(model.member_ids(), &["close".to_string(), "far".to_string()]);
    // offsets 1 and 4 gate 4:1 at eta = 1
    assert_eq!(model.global_scores().scores(), &[1.0, 4.0]);
    let w = model.global_weights().unwrap();
    assert!(w[0] > w[1], "closer member must carry more weight: {w:?}");
}

#[test]
fn holdout_and_kfold_agree_on_easy_data() {
    let n = 150;
    let xs: Vec<f64> = (0..n).map(|i| 20.0 * i as f64 / (n - 1) as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|x| x.sin() + 4.0).collect();
    let data = Dataset::regression(
        DMatrix::from_column_slice(n, 1, &xs),
        ys,
        vec!["x".into()],
    )
    .unwrap();

    let kfold_model = fit(&analytic_pair(), &data, &synthetic_config()).unwrap();
    let mut holdout_config = synthetic_config();
    holdout_config.protocol = TrainingProtocol::Holdout { fraction: 0.4 };
    let holdout_model = fit(&analytic_pair(), &data, &holdout_config).unwrap();

    for x in [1.0f64, 8.5, 17.0] {
        let truth = x.sin() + 4.0;
        let (a, _) = kfold_model.predict(&[x], 0).unwrap();
        let (b, _) = holdout_model.predict(&[x], 0).unwrap();
        assert!((a.scalar() - truth).abs() < 0.05);
        assert!((b.scalar() - truth).abs() < 0.05);
    }
}
