//! Time-dependent weighting: per-lead-time error profiles relative to each
//! member's average error over the horizon.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cube::PredictionCube;
use crate::error::{CsgeError, Result};
use crate::scoring::Scorer;
use crate::softgate::{soft_gate, SoftGateConfig};

/// Lead-time error table: `mean_errors[(t, j)]` is member j's mean error at
/// lead time t, `relative[(t, j)]` the same divided by the member's mean
/// error over the whole horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeScores {
    mean_errors: DMatrix<f64>,
    relative: DMatrix<f64>,
}

impl TimeScores {
    pub fn horizon(&self) -> usize {
        self.relative.nrows()
    }

    pub fn n_members(&self) -> usize {
        self.relative.ncols()
    }

    pub fn mean_errors(&self) -> &DMatrix<f64> {
        &self.mean_errors
    }

    pub fn relative(&self) -> &DMatrix<f64> {
        &self.relative
    }

    /// Relative scores of all members at lead time `t`.
    pub fn relative_row(&self, t: usize) -> Result<Vec<f64>> {
        if t >= self.horizon() {
            return Err(CsgeError::LeadTimeOutOfRange {
                t,
                horizon: self.horizon(),
            });
        }
        Ok(self.relative.row(t).iter().copied().collect())
    }
}

/// Builds the lead-time error profile from out-of-fold predictions.
///
/// A member whose mean error over the horizon is zero gets a neutral
/// profile of all ones; its dominance is expressed through the global and
/// local aspects instead.
pub fn fit_time(
    cube: &PredictionCube,
    targets: &DMatrix<f64>,
    scorer: &Scorer,
) -> Result<TimeScores> {
    let (n, horizon) = (cube.n_samples(), cube.horizon());
    if targets.nrows() != n || targets.ncols() != horizon {
        return Err(CsgeError::shape(
            "time scores targets",
            format!("{n}x{horizon}"),
            format!("{}x{}", targets.nrows(), targets.ncols()),
        ));
    }
    let j_members = cube.n_members();
    let mut mean_errors = DMatrix::zeros(horizon, j_members);
    for t in 0..horizon {
        for j in 0..j_members {
            let mut sum = 0.0;
            for sample in 0..n {
                sum += scorer.score(cube.get(sample, j, t), targets[(sample, t)])?;
            }
            mean_errors[(t, j)] = sum / n as f64;
        }
    }

    let mut relative = DMatrix::zeros(horizon, j_members);
    for j in 0..j_members {
        let horizon_mean = mean_errors.column(j).sum() / horizon as f64;
        for t in 0..horizon {
            relative[(t, j)] = if horizon_mean > 0.0 {
                mean_errors[(t, j)] / horizon_mean
            } else {
                1.0
            };
        }
    }
    Ok(TimeScores {
        mean_errors,
        relative,
    })
}

/// Soft-gates the relative scores at lead time `t` into the time weight
/// vector.
pub fn time_weights(
    scores: &TimeScores,
    t: usize,
    eta_time: f64,
    cfg: &SoftGateConfig,
) -> Result<Vec<f64>> {
    soft_gate(&scores.relative_row(t)?, eta_time, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(j: usize) -> Vec<String> {
        (0..j).map(|i| format!("m{i}")).collect()
    }

    #[test]
    fn constant_profile_is_all_ones() {
        let targets = DMatrix::from_element(4, 3, 0.0);
        // member 0 always off by 2, member 1 always off by 5
        let cube = PredictionCube::from_fn(4, 3, ids(2), |_, j, _| {
            if j == 0 { 2.0 } else { 5.0 }
        })
        .unwrap();
        let ts = fit_time(&cube, &targets, &Scorer::AbsoluteError).unwrap();
        for t in 0..3 {
            for j in 0..2 {
                assert!((ts.relative()[(t, j)] - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_lead_time_is_neutral() {
        let targets = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
        let cube = PredictionCube::from_fn(3, 1, ids(2), |n, j, _| n as f64 + j as f64).unwrap();
        let ts = fit_time(&cube, &targets, &Scorer::AbsoluteError).unwrap();
        assert_eq!(ts.relative_row(0).unwrap(), vec![1.0, 1.0]);
        assert!(matches!(
            ts.relative_row(1),
            Err(CsgeError::LeadTimeOutOfRange { .. })
        ));
    }

    #[test]
    fn two_step_profile_divides_by_the_mean() {
        let targets = DMatrix::from_element(5, 2, 0.0);
        // member 0: errors 1 then 3; member 1: constant 2
        let cube = PredictionCube::from_fn(5, 2, ids(2), |_, j, t| {
            if j == 0 {
                if t == 0 { 1.0 } else { 3.0 }
            } else {
                2.0
            }
        })
        .unwrap();
        let ts = fit_time(&cube, &targets, &Scorer::AbsoluteError).unwrap();
        assert!((ts.relative()[(0, 0)] - 0.5).abs() < 1e-12);
        assert!((ts.relative()[(1, 0)] - 1.5).abs() < 1e-12);
        assert!((ts.relative()[(0, 1)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_member_gets_neutral_profile() {
        let targets = DMatrix::from_element(3, 2, 7.0);
        let cube = PredictionCube::from_fn(3, 2, ids(2), |_, j, t| {
            if j == 0 { 7.0 } else { 7.0 + t as f64 }
        })
        .unwrap();
        let ts = fit_time(&cube, &targets, &Scorer::AbsoluteError).unwrap();
        assert_eq!(ts.relative()[(0, 0)], 1.0);
        assert_eq!(ts.relative()[(1, 0)], 1.0);
    }

    #[test]
    fn row_means_are_one_for_imperfect_members() {
        let targets = DMatrix::from_element(6, 4, 0.0);
        let cube = PredictionCube::from_fn(6, 4, ids(3), |n, j, t| {
            0.1 + ((n + 2 * j + 3 * t) as f64 * 0.713).sin().abs()
        })
        .unwrap();
        let ts = fit_time(&cube, &targets, &Scorer::SquaredError).unwrap();
        for j in 0..3 {
            let mean: f64 = (0..4).map(|t| ts.relative()[(t, j)]).sum::<f64>() / 4.0;
            assert!((mean - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn gating_examples() {
        let cfg = SoftGateConfig::default();
        let targets = DMatrix::from_element(5, 2, 0.0);
        // mirrored profiles: the t = 0 relative row is [0.5, 1.5]
        let cube = PredictionCube::from_fn(5, 2, ids(2), |_, j, t| {
            match (j, t) {
                (0, 0) => 1.0,
                (0, _) => 3.0,
                (_, 0) => 3.0,
                _ => 1.0,
            }
        })
        .unwrap();
        let ts = fit_time(&cube, &targets, &Scorer::AbsoluteError).unwrap();
        assert_eq!(ts.relative_row(0).unwrap(), vec![0.5, 1.5]);
        let w = time_weights(&ts, 0, 1.0, &cfg).unwrap();
        assert!((w[0] - 0.75).abs() < 1e-9);
        assert!((w[1] - 0.25).abs() < 1e-9);
        let uniform_row = TimeScores {
            mean_errors: DMatrix::from_element(1, 2, 1.0),
            relative: DMatrix::from_element(1, 2, 1.0),
        };
        let w = time_weights(&uniform_row, 0, 3.0, &cfg).unwrap();
        assert!((w[0] - 0.5).abs() < 1e-12);
    }
}
