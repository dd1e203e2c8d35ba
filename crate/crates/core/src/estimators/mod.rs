//! Base estimators the ensemble fuses.
//!
//! The ensemble treats members as black boxes; these built-ins exist so the
//! library is self-contained and experiments are runnable without external
//! model outputs. Externally produced predictions can be imported through
//! `io::import_external_predictions` instead.

mod expr;
mod linear;
mod tree;

pub use expr::Expr;
pub use tree::{TreeNode, TreeParams};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Task};
use crate::error::{CsgeError, Result};

/// Declarative description of one ensemble member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EstimatorSpec {
    LinearLeastSquares {
        #[serde(default)]
        ridge: f64,
    },
    KnnRegressor {
        #[serde(default = "default_k")]
        k: usize,
    },
    KnnClassifier {
        #[serde(default = "default_k")]
        k: usize,
    },
    DecisionTree {
        #[serde(default = "default_depth")]
        max_depth: usize,
        #[serde(default = "default_min_leaf")]
        min_leaf_size: usize,
    },
    AnalyticFunction {
        expr: String,
    },
}

fn default_k() -> usize {
    5
}

fn default_depth() -> usize {
    5
}

fn default_min_leaf() -> usize {
    1
}

impl EstimatorSpec {
    /// Short stable name used as the default member id.
    pub fn label(&self) -> &'static str {
        match self {
            EstimatorSpec::LinearLeastSquares { .. } => "linear_least_squares",
            EstimatorSpec::KnnRegressor { .. } => "knn_regressor",
            EstimatorSpec::KnnClassifier { .. } => "knn_classifier",
            EstimatorSpec::DecisionTree { .. } => "decision_tree",
            EstimatorSpec::AnalyticFunction { .. } => "analytic_function",
        }
    }

    /// Validates hyper-parameters for this kind.
    pub fn validate(&self) -> Result<()> {
        match self {
            EstimatorSpec::LinearLeastSquares { ridge } => {
                if !ridge.is_finite() || *ridge < 0.0 {
                    return Err(CsgeError::InvalidHyperParams(format!(
                        "ridge must be a nonnegative real, got {ridge}"
                    )));
                }
            }
            EstimatorSpec::KnnRegressor { k } | EstimatorSpec::KnnClassifier { k } => {
                if *k == 0 {
                    return Err(CsgeError::InvalidHyperParams("knn k must be at least 1".into()));
                }
            }
            EstimatorSpec::DecisionTree {
                max_depth,
                min_leaf_size,
            } => {
                if *max_depth == 0 {
                    return Err(CsgeError::InvalidHyperParams(
                        "tree max_depth must be at least 1".into(),
                    ));
                }
                if *min_leaf_size == 0 {
                    return Err(CsgeError::InvalidHyperParams(
                        "tree min_leaf_size must be at least 1".into(),
                    ));
                }
            }
            EstimatorSpec::AnalyticFunction { expr } => {
                Expr::parse(expr)?;
            }
        }
        Ok(())
    }

    /// Minimum training-set size this kind needs.
    pub fn min_train_samples(&self) -> usize {
        match self {
            EstimatorSpec::KnnRegressor { k } | EstimatorSpec::KnnClassifier { k } => *k,
            EstimatorSpec::AnalyticFunction { .. } => 0,
            _ => 1,
        }
    }

    /// Fits the member on a validated dataset. Deterministic given the spec
    /// and the data; analytic members ignore the data entirely.
    pub fn fit(&self, data: &Dataset) -> Result<FittedEstimator> {
        self.validate()?;
        let task = data.task();
        match self {
            EstimatorSpec::LinearLeastSquares { ridge } => {
                require_regression(task, self.label())?;
                let mut coefficient_sets = Vec::with_capacity(data.horizon());
                for t in 0..data.horizon() {
                    let targets = DVector::from_fn(data.n_samples(), |i, _| data.target(i, t));
                    coefficient_sets.push(linear::fit_least_squares(
                        data.features(),
                        &targets,
                        *ridge,
                    )?);
                }
                Ok(FittedEstimator::Linear { coefficient_sets })
            }
            EstimatorSpec::KnnRegressor { k } => {
                require_regression(task, self.label())?;
                if *k > data.n_samples() {
                    return Err(CsgeError::DegenerateData(format!(
                        "knn_regressor k = {k} exceeds {} training samples",
                        data.n_samples()
                    )));
                }
                Ok(FittedEstimator::KnnRegressor {
                    k: *k,
                    train_features: data.features().clone(),
                    train_targets: data.targets().clone(),
                })
            }
            EstimatorSpec::KnnClassifier { k } => {
                let n_classes = require_classification(task, self.label())?;
                if *k > data.n_samples() {
                    return Err(CsgeError::DegenerateData(format!(
                        "knn_classifier k = {k} exceeds {} training samples",
                        data.n_samples()
                    )));
                }
                let labels = (0..data.n_samples()).map(|i| data.label(i)).collect();
                Ok(FittedEstimator::KnnClassifier {
                    k: *k,
                    train_features: data.features().clone(),
                    labels,
                    n_classes,
                })
            }
            EstimatorSpec::DecisionTree {
                max_depth,
                min_leaf_size,
            } => {
                let params = TreeParams {
                    max_depth: *max_depth,
                    min_leaf_size: *min_leaf_size,
                };
                match task {
                    Task::Regression => {
                        let mut trees = Vec::with_capacity(data.horizon());
                        for t in 0..data.horizon() {
                            let targets: Vec<f64> =
                                (0..data.n_samples()).map(|i| data.target(i, t)).collect();
                            trees.push(tree::fit_regression_tree(
                                data.features(),
                                &targets,
                                &params,
                            )?);
                        }
                        Ok(FittedEstimator::RegressionTree { trees })
                    }
                    Task::Classification { n_classes } => {
                        let labels: Vec<usize> =
                            (0..data.n_samples()).map(|i| data.label(i)).collect();
                        let node = tree::fit_classification_tree(
                            data.features(),
                            &labels,
                            n_classes,
                            &params,
                        )?;
                        Ok(FittedEstimator::ClassificationTree { tree: node, n_classes })
                    }
                }
            }
            EstimatorSpec::AnalyticFunction { expr } => {
                require_regression(task, self.label())?;
                let parsed = Expr::parse(expr)?;
                if let Some(max_index) = parsed.max_feature_index() {
                    if max_index >= data.n_features() {
                        return Err(CsgeError::InvalidHyperParams(format!(
                            "expression references x[{max_index}] but data has {} features",
                            data.n_features()
                        )));
                    }
                }
                Ok(FittedEstimator::Analytic {
                    source: expr.clone(),
                    expr: parsed,
                })
            }
        }
    }
}

fn require_regression(task: Task, label: &str) -> Result<()> {
    if task.is_classification() {
        return Err(CsgeError::InvalidHyperParams(format!(
            "{label} only supports regression targets"
        )));
    }
    Ok(())
}

fn require_classification(task: Task, label: &str) -> Result<usize> {
    task.n_classes().ok_or_else(|| {
        CsgeError::InvalidHyperParams(format!("{label} only supports classification targets"))
    })
}

/// One member prediction: a scalar for regression, a probability vector
/// (summing to 1) for classification.
#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    Value(f64),
    Probabilities(Vec<f64>),
}

impl Prediction {
    /// Scalar view: the value itself, or the most probable class index with
    /// ties broken toward the lowest class.
    pub fn scalar(&self) -> f64 {
        match self {
            Prediction::Value(v) => *v,
            Prediction::Probabilities(p) => argmax(p) as f64,
        }
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// A trained ensemble member. Immutable; `predict` is freely concurrent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FittedEstimator {
    Linear {
        /// One coefficient vector per lead time, intercept last.
        coefficient_sets: Vec<DVector<f64>>,
    },
    KnnRegressor {
        k: usize,
        train_features: DMatrix<f64>,
        train_targets: DMatrix<f64>,
    },
    KnnClassifier {
        k: usize,
        train_features: DMatrix<f64>,
        labels: Vec<usize>,
        n_classes: usize,
    },
    RegressionTree {
        /// One tree per lead time.
        trees: Vec<TreeNode>,
    },
    ClassificationTree {
        tree: TreeNode,
        n_classes: usize,
    },
    Analytic {
        source: String,
        expr: Expr,
    },
}

impl FittedEstimator {
    /// Predicts for a feature row at lead time `t`.
    pub fn predict(&self, x: &[f64], t: usize) -> Result<Prediction> {
        for (col, v) in x.iter().enumerate() {
            if !v.is_finite() {
                return Err(CsgeError::NonFiniteValue {
                    row: 0,
                    col,
                    context: "prediction input",
                });
            }
        }
        let prediction = match self {
            FittedEstimator::Linear { coefficient_sets } => {
                let coefficients = coefficient_sets.get(t).ok_or(CsgeError::LeadTimeOutOfRange {
                    t,
                    horizon: coefficient_sets.len(),
                })?;
                check_width(x.len(), coefficients.len() - 1)?;
                Prediction::Value(linear::predict_linear(coefficients, x))
            }
            FittedEstimator::KnnRegressor {
                k,
                train_features,
                train_targets,
            } => {
                if t >= train_targets.ncols() {
                    return Err(CsgeError::LeadTimeOutOfRange {
                        t,
                        horizon: train_targets.ncols(),
                    });
                }
                check_width(x.len(), train_features.ncols())?;
                let neighbors = nearest_neighbors(train_features, x, *k);
                let mean = neighbors
                    .iter()
                    .map(|&row| train_targets[(row, t)])
                    .sum::<f64>()
                    / neighbors.len() as f64;
                Prediction::Value(mean)
            }
            FittedEstimator::KnnClassifier {
                k,
                train_features,
                labels,
                n_classes,
            } => {
                check_width(x.len(), train_features.ncols())?;
                let neighbors = nearest_neighbors(train_features, x, *k);
                let mut counts = vec![0usize; *n_classes];
                for &row in &neighbors {
                    counts[labels[row]] += 1;
                }
                Prediction::Probabilities(
                    counts
                        .iter()
                        .map(|&c| c as f64 / neighbors.len() as f64)
                        .collect(),
                )
            }
            FittedEstimator::RegressionTree { trees } => {
                let node = trees.get(t).ok_or(CsgeError::LeadTimeOutOfRange {
                    t,
                    horizon: trees.len(),
                })?;
                Prediction::Value(node.regression_value(x))
            }
            FittedEstimator::ClassificationTree { tree, .. } => {
                Prediction::Probabilities(tree.class_probabilities(x))
            }
            FittedEstimator::Analytic { expr, .. } => {
                Prediction::Value(expr.eval(x, t as f64)?)
            }
        };
        if let Prediction::Value(v) = prediction {
            if !v.is_finite() {
                return Err(CsgeError::NonFiniteValue {
                    row: 0,
                    col: 0,
                    context: "prediction output",
                });
            }
        }
        Ok(prediction)
    }
}

fn check_width(got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(CsgeError::shape("prediction input width", expected, got));
    }
    Ok(())
}

/// Rows of the `k` nearest training points under Euclidean distance, ties
/// broken toward the lowest row index. Returned ascending so that target
/// sums are independent of the query point when `k = N`.
fn nearest_neighbors(train_features: &DMatrix<f64>, x: &[f64], k: usize) -> Vec<usize> {
    let mut by_distance: Vec<(f64, usize)> = (0..train_features.nrows())
        .map(|row| {
            let d2: f64 = (0..train_features.ncols())
                .map(|col| {
                    let diff = train_features[(row, col)] - x[col];
                    diff * diff
                })
                .sum();
            (d2, row)
        })
        .collect();
    by_distance.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut rows: Vec<usize> = by_distance.iter().take(k).map(|&(_, row)| row).collect();
    rows.sort_unstable();
    rows
}
