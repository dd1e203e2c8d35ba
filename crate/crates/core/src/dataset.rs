//! Feature/target containers and ingestion validation.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CsgeError, Result};

/// What the targets mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Regression,
    Classification { n_classes: usize },
}

impl Task {
    pub fn is_classification(&self) -> bool {
        matches!(self, Task::Classification { .. })
    }

    pub fn n_classes(&self) -> Option<usize> {
        match self {
            Task::Regression => None,
            Task::Classification { n_classes } => Some(*n_classes),
        }
    }
}

/// An immutable training or evaluation set.
///
/// `features` is N x F, `targets` is N x T where T is the forecast horizon
/// (T = 1 for plain regression and classification). Classification targets
/// are class indices stored as floats.
#[derive(Debug, Clone)]
pub struct Dataset {
    features: DMatrix<f64>,
    targets: DMatrix<f64>,
    feature_names: Vec<String>,
    task: Task,
}

impl Dataset {
    /// Builds a dataset, running full ingestion validation.
    pub fn new(
        features: DMatrix<f64>,
        targets: DMatrix<f64>,
        feature_names: Vec<String>,
        task: Task,
    ) -> Result<Self> {
        let d = Dataset {
            features,
            targets,
            feature_names,
            task,
        };
        d.validate()?;
        Ok(d)
    }

    /// Convenience constructor for single-horizon regression data.
    pub fn regression(
        features: DMatrix<f64>,
        targets: Vec<f64>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let n = targets.len();
        Dataset::new(
            features,
            DMatrix::from_column_slice(n, 1, &targets),
            feature_names,
            Task::Regression,
        )
    }

    /// Re-checks every invariant; returns `Ok(())` when the dataset is sound.
    pub fn validate(&self) -> Result<()> {
        let (n, f) = self.features.shape();
        if n == 0 || f == 0 {
            return Err(CsgeError::shape(
                "dataset features",
                "at least 1x1",
                format!("{n}x{f}"),
            ));
        }
        if self.targets.nrows() != n {
            return Err(CsgeError::shape(
                "dataset targets",
                format!("{n} rows"),
                format!("{} rows", self.targets.nrows()),
            ));
        }
        if self.targets.ncols() == 0 {
            return Err(CsgeError::shape("dataset targets", "T >= 1", "T = 0"));
        }
        if self.feature_names.len() != f {
            return Err(CsgeError::shape(
                "feature names",
                f,
                self.feature_names.len(),
            ));
        }
        for row in 0..n {
            for col in 0..f {
                if !self.features[(row, col)].is_finite() {
                    return Err(CsgeError::NonFiniteValue {
                        row,
                        col,
                        context: "features",
                    });
                }
            }
            for col in 0..self.targets.ncols() {
                if !self.targets[(row, col)].is_finite() {
                    return Err(CsgeError::NonFiniteValue {
                        row,
                        col,
                        context: "targets",
                    });
                }
            }
        }
        if let Task::Classification { n_classes } = self.task {
            if n_classes < 2 {
                return Err(CsgeError::InvalidHyperParams(
                    "classification needs at least 2 classes".into(),
                ));
            }
            if self.targets.ncols() != 1 {
                return Err(CsgeError::Unsupported(
                    "lead-time axes are not supported for classification targets".into(),
                ));
            }
            for row in 0..n {
                let y = self.targets[(row, 0)];
                if y.fract() != 0.0 || y < 0.0 || y >= n_classes as f64 {
                    return Err(CsgeError::InvalidHyperParams(format!(
                        "target at row {row} is {y}, not a class index below {n_classes}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// Forecast horizon T; 1 when there is no lead-time axis.
    pub fn horizon(&self) -> usize {
        self.targets.ncols()
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn targets(&self) -> &DMatrix<f64> {
        &self.targets
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature_row(&self, n: usize) -> Vec<f64> {
        self.features.row(n).iter().copied().collect()
    }

    pub fn target(&self, n: usize, t: usize) -> f64 {
        self.targets[(n, t)]
    }

    /// Class index of sample `n` (classification only).
    pub fn label(&self, n: usize) -> usize {
        self.targets[(n, 0)] as usize
    }

    /// Row subset in the given order. Indices must be in range.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let features = DMatrix::from_fn(rows.len(), self.n_features(), |i, j| {
            self.features[(rows[i], j)]
        });
        let targets =
            DMatrix::from_fn(rows.len(), self.horizon(), |i, j| self.targets[(rows[i], j)]);
        Dataset {
            features,
            targets,
            feature_names: self.feature_names.clone(),
            task: self.task,
        }
    }
}

/// Validates a dataset and passes it through unchanged.
pub fn validate_dataset(dataset: Dataset) -> Result<Dataset> {
    dataset.validate()?;
    Ok(dataset)
}
