//! Ordinary least squares via the normal equations, with a tiny ridge
//! fallback when they are singular.

use nalgebra::{DMatrix, DVector};

use crate::error::{CsgeError, Result};

/// Fits `y ~ X w + b`; returns `F + 1` coefficients with the intercept last.
pub fn fit_least_squares(features: &DMatrix<f64>, targets: &DVector<f64>, ridge: f64) -> Result<DVector<f64>> {
    let (n, f) = features.shape();
    let augmented = DMatrix::from_fn(n, f + 1, |i, j| if j < f { features[(i, j)] } else { 1.0 });
    let gram = augmented.transpose() * &augmented;
    let moment = augmented.transpose() * targets;

    let solve = |lambda: f64| -> Option<DVector<f64>> {
        let mut lhs = gram.clone();
        if lambda > 0.0 {
            for i in 0..lhs.nrows() {
                lhs[(i, i)] += lambda;
            }
        }
        lhs.cholesky().map(|ch| ch.solve(&moment))
    };

    solve(ridge)
        .or_else(|| solve(ridge.max(1e-10)))
        .ok_or_else(|| {
            CsgeError::DegenerateData("normal equations are singular even with ridge".into())
        })
}

/// Applies fitted coefficients to a feature row.
pub fn predict_linear(coefficients: &DVector<f64>, x: &[f64]) -> f64 {
    let f = coefficients.len() - 1;
    let mut value = coefficients[f];
    for (i, &xi) in x.iter().take(f).enumerate() {
        value += coefficients[i] * xi;
    }
    value
}
