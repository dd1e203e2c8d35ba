//! Error-valued scoring functions.
//!
//! Every scorer is an error: nonnegative, zero on a perfect prediction,
//! lower is better. Accuracy-style metrics must be supplied as
//! `1 - accuracy`, which is what [`Scorer::ZeroOneError`] does per sample.

use std::fmt;
use std::sync::Arc;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CsgeError, Result};

/// A per-sample scoring function `theta(predicted, truth) -> error`.
#[derive(Clone)]
pub enum Scorer {
    /// `(predicted - truth)^2`
    SquaredError,
    /// `|predicted - truth|`
    AbsoluteError,
    /// `0` if the predicted class equals the true class, else `1`
    /// (per-sample `1 - accuracy`).
    ZeroOneError,
    /// Caller-provided error function. Must be nonnegative on finite inputs.
    UserSupplied {
        name: String,
        f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    },
}

impl Scorer {
    /// Stable identifier used in config files and model documents.
    pub fn name(&self) -> &str {
        match self {
            Scorer::SquaredError => "squared_error",
            Scorer::AbsoluteError => "absolute_error",
            Scorer::ZeroOneError => "zero_one_error",
            Scorer::UserSupplied { name, .. } => name,
        }
    }

    /// Looks a built-in scorer up by its [`name`](Self::name).
    pub fn from_name(name: &str) -> Result<Scorer> {
        match name {
            "squared_error" => Ok(Scorer::SquaredError),
            "absolute_error" => Ok(Scorer::AbsoluteError),
            "zero_one_error" => Ok(Scorer::ZeroOneError),
            other => Err(CsgeError::Unsupported(format!(
                "unknown scorer `{other}`; built-ins are squared_error, absolute_error, zero_one_error"
            ))),
        }
    }

    /// Name of the aggregate metric reported by evaluation harnesses.
    pub fn metric_name(&self) -> &'static str {
        match self {
            Scorer::SquaredError => "rmse",
            Scorer::AbsoluteError => "mae",
            Scorer::ZeroOneError => "error_rate",
            Scorer::UserSupplied { .. } => "mean_score",
        }
    }

    /// Aggregates per-sample scores into the reported metric
    /// (root of the mean for squared error, plain mean otherwise).
    pub fn aggregate(&self, scores: &[f64]) -> f64 {
        if scores.is_empty() {
            return 0.0;
        }
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        match self {
            Scorer::SquaredError => mean.sqrt(),
            _ => mean,
        }
    }

    /// Scores one prediction against the ground truth.
    pub fn score(&self, predicted: f64, truth: f64) -> Result<f64> {
        if !predicted.is_finite() {
            return Err(CsgeError::NonFiniteValue {
                row: 0,
                col: 0,
                context: "scorer prediction argument",
            });
        }
        if !truth.is_finite() {
            return Err(CsgeError::NonFiniteValue {
                row: 0,
                col: 0,
                context: "scorer truth argument",
            });
        }
        let value = match self {
            Scorer::SquaredError => {
                let d = predicted - truth;
                d * d
            }
            Scorer::AbsoluteError => (predicted - truth).abs(),
            Scorer::ZeroOneError => {
                if predicted == truth {
                    0.0
                } else {
                    1.0
                }
            }
            Scorer::UserSupplied { f, .. } => f(predicted, truth),
        };
        if !value.is_finite() {
            return Err(CsgeError::NonFiniteValue {
                row: 0,
                col: 0,
                context: "scorer output",
            });
        }
        if value < 0.0 {
            return Err(CsgeError::NegativeError {
                index: 0,
                value,
            });
        }
        Ok(value)
    }
}

impl fmt::Debug for Scorer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Scorer({})", self.name())
    }
}

impl PartialEq for Scorer {
    fn eq(&self, other: &Self) -> bool {
        self.name() == other.name()
    }
}

impl Serialize for Scorer {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Scorer {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let name = String::deserialize(deserializer)?;
        Scorer::from_name(&name).map_err(D::Error::custom)
    }
}

/// Free-function form of [`Scorer::score`].
pub fn score(scorer: &Scorer, predicted: f64, truth: f64) -> Result<f64> {
    scorer.score(predicted, truth)
}
