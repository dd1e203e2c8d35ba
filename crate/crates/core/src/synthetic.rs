//! Noise-free synthetic experiments, one per weighting aspect.
//!
//! Each experiment pairs a generating function with two analytic members
//! that the ensemble must recombine to recover it: a constant-offset pair
//! for the global aspect, a piecewise regime switch over the feature space
//! for the local aspect, and a regime switch over the lead time for the
//! time aspect.

use std::str::FromStr;

use nalgebra::DMatrix;

use crate::dataset::{Dataset, Task};
use crate::ensemble::{CsgeConfig, TrainingProtocol};
use crate::error::{CsgeError, Result};
use crate::estimators::EstimatorSpec;
use crate::optim::ObjectiveConfig;
use crate::scoring::Scorer;
use crate::util::linspace;
use crate::weighting::WeightingConfig;

/// Which aspect the experiment isolates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    Global,
    Local,
    Time,
}

impl SyntheticKind {
    pub fn name(&self) -> &'static str {
        match self {
            SyntheticKind::Global => "global",
            SyntheticKind::Local => "local",
            SyntheticKind::Time => "time",
        }
    }

    /// Forecast horizon of the experiment.
    pub fn horizon(&self) -> usize {
        match self {
            SyntheticKind::Time => 6,
            _ => 1,
        }
    }
}

impl FromStr for SyntheticKind {
    type Err = CsgeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global" => Ok(SyntheticKind::Global),
            "local" => Ok(SyntheticKind::Local),
            "time" => Ok(SyntheticKind::Time),
            other => Err(CsgeError::InvalidHyperParams(format!(
                "unknown synthetic experiment `{other}` (expected global, local, or time)"
            ))),
        }
    }
}

/// The generating function of each experiment.
pub fn target_value(kind: SyntheticKind, x: f64, t: usize) -> f64 {
    match kind {
        SyntheticKind::Global => x.sin() + 4.0,
        SyntheticKind::Local => {
            if (10.0..=15.0).contains(&x) {
                x.sin() + 10.0
            } else {
                x.sin()
            }
        }
        SyntheticKind::Time => {
            if t >= 3 {
                x.sin() + 10.0
            } else {
                x.sin()
            }
        }
    }
}

/// A ready-to-run experiment: train/test data, the analytic member pair,
/// and a training configuration tuned for the noise-free setting.
#[derive(Debug, Clone)]
pub struct SyntheticSetup {
    pub kind: SyntheticKind,
    pub train: Dataset,
    pub test: Dataset,
    pub specs: Vec<EstimatorSpec>,
    pub config: CsgeConfig,
}

/// Generates a synthetic experiment over an even grid of `n_samples` points
/// on `x_range` (test points sit on the midpoints of the training grid).
/// The seed steers fold assignment, not the data: the experiments are
/// noise-free by construction.
pub fn generate_synthetic(
    kind: SyntheticKind,
    n_samples: usize,
    x_range: (f64, f64),
    seed: u64,
) -> Result<SyntheticSetup> {
    if n_samples < 50 {
        return Err(CsgeError::InvalidHyperParams(format!(
            "synthetic experiments need at least 50 samples, got {n_samples}"
        )));
    }
    let (lo, hi) = x_range;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(CsgeError::InvalidHyperParams(format!(
            "invalid x range [{lo}, {hi}]"
        )));
    }

    let train_xs = linspace(lo, hi, n_samples);
    let test_xs: Vec<f64> = train_xs.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let build = |xs: &[f64]| -> Result<Dataset> {
        let features = DMatrix::from_column_slice(xs.len(), 1, xs);
        let targets = DMatrix::from_fn(xs.len(), kind.horizon(), |i, t| {
            target_value(kind, xs[i], t)
        });
        Dataset::new(features, targets, vec!["x".into()], Task::Regression)
    };

    let specs = vec![
        EstimatorSpec::AnalyticFunction {
            expr: "sin(x[0])".into(),
        },
        EstimatorSpec::AnalyticFunction {
            expr: "sin(x[0]) + 10".into(),
        },
    ];
    let config = CsgeConfig {
        protocol: TrainingProtocol::KFold { folds: 5 },
        objective: ObjectiveConfig {
            c_reg: 0.01,
            use_penalty_heuristic: false,
            ..Default::default()
        },
        weighting: WeightingConfig {
            n_dim: Some(1),
            neighbors: Some(5),
        },
        scorer: Scorer::AbsoluteError,
        seed,
        ..Default::default()
    };

    Ok(SyntheticSetup {
        kind,
        train: build(&train_xs)?,
        test: build(&test_xs)?,
        specs,
        config,
    })
}
