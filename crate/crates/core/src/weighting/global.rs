//! Global weighting: one constant error score per member, fixed after
//! training.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cube::PredictionCube;
use crate::error::{CsgeError, Result};
use crate::scoring::Scorer;
use crate::softgate::{soft_gate, SoftGateConfig};

/// Mean error per member over the training data, at lead time 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalScores {
    scores: Vec<f64>,
}

impl GlobalScores {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        for (index, &value) in scores.iter().enumerate() {
            if !value.is_finite() {
                return Err(CsgeError::NonFiniteValue {
                    row: 0,
                    col: index,
                    context: "global scores",
                });
            }
            if value < 0.0 {
                return Err(CsgeError::NegativeError { index, value });
            }
        }
        Ok(GlobalScores { scores })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn n_members(&self) -> usize {
        self.scores.len()
    }
}

/// Computes the per-member mean error over the lead-time-0 slice of the
/// out-of-fold predictions.
pub fn fit_global(
    cube: &PredictionCube,
    targets: &DMatrix<f64>,
    scorer: &Scorer,
) -> Result<GlobalScores> {
    if targets.nrows() != cube.n_samples() {
        return Err(CsgeError::shape(
            "global scores targets",
            cube.n_samples(),
            targets.nrows(),
        ));
    }
    let n = cube.n_samples();
    let mut scores = Vec::with_capacity(cube.n_members());
    for j in 0..cube.n_members() {
        let mut sum = 0.0;
        for sample in 0..n {
            sum += scorer.score(cube.get(sample, j, 0), targets[(sample, 0)])?;
        }
        scores.push(sum / n as f64);
    }
    GlobalScores::new(scores)
}

/// Soft-gates the global scores into the global weight vector.
pub fn global_weights(
    scores: &GlobalScores,
    eta_global: f64,
    cfg: &SoftGateConfig,
) -> Result<Vec<f64>> {
    soft_gate(scores.scores(), eta_global, cfg)
}
