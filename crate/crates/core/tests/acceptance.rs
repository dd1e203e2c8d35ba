//! Acceptance suite: one test per release criterion, each printing a
//! PASS line (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! Tolerances and thresholds are pinned in code; nothing here is
//! calibrated after the fact.

use std::path::PathBuf;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use csge_core::io::{load_csv, model_from_json, model_to_json, CsvSchema};
use csge_core::{
    build_prediction_cube_with_observer, eta_penalty, fit, fit_pca, generate_synthetic,
    repeated_cv, soft_gate, CsgeConfig, CsgeModel, Dataset, EstimatorSpec, FoldPlan,
    ObjectiveConfig, Scorer, SoftGateConfig, SyntheticKind, TrainingProtocol, WeightingConfig,
};

fn pass(criterion: usize, label: &str) {
    println!("criterion {criterion} PASS - {label}");
}

fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

#[test]
fn criterion_01_soft_gate_algebra() {
    let cfg = SoftGateConfig::default();

    let w = soft_gate(&[1.0, 3.0], 1.0, &cfg).unwrap();
    assert!((w[0] - 0.75).abs() <= 1e-9, "eta=1: {w:?}");
    assert!((w[1] - 0.25).abs() <= 1e-9);

    let w = soft_gate(&[1.0, 3.0], 2.0, &cfg).unwrap();
    assert!((w[0] - 0.9).abs() <= 1e-9, "eta=2: {w:?}");
    assert!((w[1] - 0.1).abs() <= 1e-9);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for trial in 0..50 {
        let j = rng.random_range(1..=20);
        let errors: Vec<f64> = (0..j).map(|_| rng.random_range(0.0..100.0)).collect();
        let w = soft_gate(&errors, 0.0, &cfg).unwrap();
        let uniform = 1.0 / j as f64;
        for v in &w {
            assert!((v - uniform).abs() <= 1e-9, "trial {trial}: {w:?}");
        }
    }
    pass(1, "soft-gate algebra at eta 0, 1, 2");
}

#[test]
fn criterion_02_penalty_heuristic() {
    // high-precision reference values of the penalty formula
    // 1/(1 + e^(-(x-10)/2)) + 1/(2 (1 + e^sqrt(x)))
    let reference = [
        (0.0, 0.256692850924284855559361980381),
        (4.0, 0.107027334188625558848983581121),
        (10.0, 0.520305110336687445960123929865),
    ];
    for (x, expected) in reference {
        let got = eta_penalty(x).unwrap();
        assert!(
            (got - expected).abs() <= 1e-9,
            "a({x}) = {got}, expected {expected}"
        );
    }

    // independent evaluation route, written from the formula
    let direct = |x: f64| 1.0 / (1.0 + f64::exp(-0.5 * (x - 10.0))) + 0.5 / (1.0 + x.sqrt().exp());
    let mut best_x = 0.0;
    let mut best_value = f64::INFINITY;
    for i in 0..=1200 {
        let x = i as f64 * 0.01;
        let value = eta_penalty(x).unwrap();
        assert!((value - direct(x)).abs() <= 1e-9);
        if value < best_value {
            best_value = value;
            best_x = x;
        }
    }
    assert!(
        (1.0..=6.0).contains(&best_x),
        "penalty minimum at {best_x}, outside [1, 6]"
    );
    pass(2, "penalty values and low-penalty basin");
}

#[test]
fn criterion_03_global_synthetic() {
    let setup = generate_synthetic(SyntheticKind::Global, 500, (0.0, 20.0), 42).unwrap();
    let model = fit(&setup.specs, &setup.train, &setup.config).unwrap();

    let mut squared = 0.0;
    for row in 0..setup.test.n_samples() {
        let x = setup.test.feature_row(row);
        let (prediction, _) = model.predict(&x, 0).unwrap();
        squared += (prediction.scalar() - setup.test.target(row, 0)).powi(2);
    }
    let rmse = (squared / setup.test.n_samples() as f64).sqrt();
    assert!(rmse < 0.05, "test rmse {rmse}");

    let w = model.global_weights().unwrap();
    assert!((w[0] - 0.6).abs() <= 0.02, "global weights {w:?}");
    assert!((w[1] - 0.4).abs() <= 0.02, "global weights {w:?}");
    pass(3, "global synthetic: rmse < 0.05, weights ~ [0.6, 0.4]");
}

#[test]
fn criterion_04_local_synthetic() {
    let setup = generate_synthetic(SyntheticKind::Local, 500, (0.0, 20.0), 42).unwrap();
    let model = fit(&setup.specs, &setup.train, &setup.config).unwrap();

    let mut checked = 0;
    for row in 0..setup.test.n_samples() {
        let x = setup.test.feature_row(row);
        let distance = (x[0] - 10.0).abs().min((x[0] - 15.0).abs());
        if distance < 0.5 {
            continue;
        }
        let (prediction, breakdown) = model.predict(&x, 0).unwrap();
        let truth = setup.test.target(row, 0);
        assert!(
            (prediction.scalar() - truth).abs() < 0.1,
            "x = {}: |{} - {truth}| >= 0.1",
            x[0],
            prediction.scalar()
        );
        let correct = usize::from(x[0] >= 10.0 && x[0] <= 15.0); // member 1 inside the band
        let local_weight = breakdown.members()[correct].local;
        assert!(
            local_weight > 0.9,
            "x = {}: local weight of the correct member is {local_weight}",
            x[0]
        );
        checked += 1;
    }
    assert!(checked > 400, "only {checked} test points checked");
    pass(4, "local synthetic: regime-correct predictions and local gates");
}

#[test]
fn criterion_05_time_synthetic() {
    let setup = generate_synthetic(SyntheticKind::Time, 500, (0.0, 20.0), 42).unwrap();
    let model = fit(&setup.specs, &setup.train, &setup.config).unwrap();
    assert_eq!(model.horizon(), 6);

    let mut max_error = 0.0_f64;
    for row in 0..setup.test.n_samples() {
        let x = setup.test.feature_row(row);
        for t in 0..6 {
            let (prediction, _) = model.predict(&x, t).unwrap();
            max_error = max_error.max((prediction.scalar() - setup.test.target(row, t)).abs());
        }
    }
    assert!(max_error < 0.1, "max |error| = {max_error}");

    for t in 0..6 {
        let w = model.time_weights_at(t).unwrap();
        if t < 3 {
            assert!(w[0] > 0.99, "t = {t}: f1 time weight {w:?}");
        } else {
            assert!(w[1] > 0.99, "t = {t}: f2 time weight {w:?}");
        }
    }
    pass(5, "time synthetic: lead-time gating and max error < 0.1");
}

#[test]
fn criterion_06_fold_hygiene() {
    let specs = vec![
        EstimatorSpec::AnalyticFunction { expr: "x[0]".into() },
        EstimatorSpec::AnalyticFunction { expr: "2 * x[0]".into() },
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut violations = 0usize;
    for trial in 0..1000u64 {
        let k = [2usize, 5, 10][rng.random_range(0..3)];
        let n = rng.random_range(k.max(10)..=200);
        let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let data = Dataset::regression(
            DMatrix::from_column_slice(n, 1, &xs),
            xs.clone(),
            vec!["x".into()],
        )
        .unwrap();
        let plan = FoldPlan::new(n, k, trial).unwrap();
        let assignments = plan.assignments().to_vec();
        build_prediction_cube_with_observer(&specs, &data, &plan, |_, fold, train_rows| {
            for &row in train_rows {
                if assignments[row] == fold {
                    violations += 1;
                }
            }
        })
        .unwrap();
    }
    assert_eq!(violations, 0, "{violations} fold-hygiene violations");
    pass(6, "fold hygiene over 1000 random plans");
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix; the brute-force
/// oracle for the PCA route.
fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..200 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p][q] * a[p][q];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                let t = sign / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[y][y].total_cmp(&a[x][x]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[i][i]).collect();
    let eigenvectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&i| (0..n).map(|k| v[k][i]).collect())
        .collect();
    (eigenvalues, eigenvectors)
}

#[test]
fn criterion_07_pca_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..100 {
        let (n, f) = (8, 4);
        let features = DMatrix::from_fn(n, f, |_, _| rng.random_range(-5.0..5.0));
        let pca = fit_pca(&features, f).unwrap();

        // oracle: standardize identically, then Jacobi on the covariance
        let means: Vec<f64> = (0..f).map(|j| features.column(j).sum() / n as f64).collect();
        let scales: Vec<f64> = (0..f)
            .map(|j| {
                let var = features
                    .column(j)
                    .iter()
                    .map(|v| (v - means[j]).powi(2))
                    .sum::<f64>()
                    / (n - 1) as f64;
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        let mut covariance = vec![vec![0.0; f]; f];
        for (a, cov_row) in covariance.iter_mut().enumerate() {
            for (b, cov) in cov_row.iter_mut().enumerate() {
                *cov = (0..n)
                    .map(|i| {
                        let za = (features[(i, a)] - means[a]) / scales[a];
                        let zb = (features[(i, b)] - means[b]) / scales[b];
                        za * zb
                    })
                    .sum::<f64>()
                    / (n - 1) as f64;
            }
        }
        let (oracle_values, oracle_vectors) = jacobi_eigen(covariance);

        for d in 0..f {
            assert!(
                (pca.eigenvalues()[d] - oracle_values[d]).abs() <= 1e-8,
                "trial {trial}: eigenvalue {d}: {} vs {}",
                pca.eigenvalues()[d],
                oracle_values[d]
            );
            let cosine: f64 = (0..f)
                .map(|k| pca.basis()[(k, d)] * oracle_vectors[d][k])
                .sum();
            assert!(
                cosine.abs() >= 1.0 - 1e-8,
                "trial {trial}: component {d} subspace angle cos = {cosine}"
            );
        }
    }
    pass(7, "pca matches the Jacobi eigendecomposition oracle");
}

fn diabetes() -> Dataset {
    load_csv(data_path("diabetes.csv"), &CsvSchema::regression("target")).unwrap()
}

fn built_in_members() -> Vec<EstimatorSpec> {
    vec![
        EstimatorSpec::LinearLeastSquares { ridge: 0.0 },
        EstimatorSpec::KnnRegressor { k: 5 },
        EstimatorSpec::DecisionTree {
            max_depth: 5,
            min_leaf_size: 1,
        },
    ]
}

#[test]
fn criterion_08_directional_real_data() {
    let data = diabetes();
    let seeds: Vec<u64> = (0..10).collect();
    let report = repeated_cv(&built_in_members(), &data, &CsgeConfig::default(), 10, &seeds)
        .unwrap();
    assert_eq!(report.n_repetitions, 100);

    let csge = report.row("csge").unwrap().mean;
    let averaging = report.row("averaging").unwrap().mean;
    let worst_member = report
        .rows
        .iter()
        .filter(|r| r.name != "csge" && r.name != "averaging")
        .map(|r| r.mean)
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(
        csge <= averaging,
        "csge rmse {csge} exceeds averaging {averaging}"
    );
    assert!(
        csge <= worst_member,
        "csge rmse {csge} exceeds the worst member {worst_member}"
    );
    pass(
        8,
        "diabetes 10x10 CV: csge beats averaging and the worst member",
    );
}

fn random_model(rng: &mut ChaCha8Rng) -> (CsgeModel, usize) {
    let n = rng.random_range(40..=100);
    let f = rng.random_range(1..=3);
    let features = DMatrix::from_fn(n, f, |_, _| rng.random_range(-4.0..4.0));
    let targets: Vec<f64> = (0..n)
        .map(|i| {
            let x: f64 = features[(i, 0)];
            x.sin() * 3.0 + 0.3 * x + rng.random_range(-0.5..0.5)
        })
        .collect();
    let names = (0..f).map(|i| format!("f{i}")).collect();
    let data = Dataset::regression(features, targets, names).unwrap();

    let mut specs = built_in_members();
    specs.truncate(rng.random_range(2..=3));
    let config = CsgeConfig {
        objective: ObjectiveConfig {
            c_reg: [0.0, 0.1, 1.0][rng.random_range(0..3)],
            use_penalty_heuristic: rng.random_range(0..2) == 0,
            ..Default::default()
        },
        weighting: WeightingConfig {
            n_dim: None,
            neighbors: Some(rng.random_range(1..=10)),
        },
        protocol: TrainingProtocol::KFold {
            folds: rng.random_range(2..=5),
        },
        scorer: Scorer::SquaredError,
        seed: rng.random_range(0..1000),
        ..Default::default()
    };
    let model = fit(&specs, &data, &config).unwrap();
    (model, f)
}

#[test]
fn criterion_09_normalization_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let models: Vec<(CsgeModel, usize)> = (0..10).map(|_| random_model(&mut rng)).collect();
    let mut calls = 0usize;
    while calls < 10_000 {
        for (model, f) in &models {
            let x: Vec<f64> = (0..*f).map(|_| rng.random_range(-6.0..6.0)).collect();
            let (prediction, breakdown) = model.predict(&x, 0).unwrap();
            breakdown.check_invariants(1e-9).unwrap();
            let member_values: Vec<f64> = model
                .members()
                .iter()
                .map(|m| m.predict(&x, 0).unwrap().scalar())
                .collect();
            let lo = member_values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = member_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let fused = prediction.scalar();
            assert!(
                fused >= lo && fused <= hi,
                "fused {fused} outside member range [{lo}, {hi}]"
            );
            calls += 1;
        }
    }
    pass(9, "10^4 random predicts: normalized breakdowns, fused in range");
}

#[test]
fn criterion_10_serialization_round_trip() {
    let data = diabetes();
    let rows: Vec<usize> = (0..150).collect();
    let subset = data.subset(&rows);
    let model = fit(&built_in_members(), &subset, &CsgeConfig::default()).unwrap();
    let json = model_to_json(&model).unwrap();
    let loaded = model_from_json(&json).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..1000 {
        let x: Vec<f64> = (0..data.n_features())
            .map(|j| {
                let column = data.features().column(j);
                let lo = column.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = column.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                rng.random_range(lo..=hi)
            })
            .collect();
        let (a, ba) = model.predict(&x, 0).unwrap();
        let (b, bb) = loaded.predict(&x, 0).unwrap();
        assert_eq!(
            a.scalar().to_bits(),
            b.scalar().to_bits(),
            "prediction changed after save/load"
        );
        assert_eq!(ba, bb, "breakdown changed after save/load");
    }
    pass(10, "save -> load -> predict is bit-identical on 10^3 queries");
}
