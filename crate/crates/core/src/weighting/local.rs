//! Local weighting: query-time member errors over the nearest historical
//! situations, after a PCA projection of the standardized feature space.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CsgeError, Result};
use crate::softgate::{soft_gate, SoftGateConfig};

/// Standardize-then-project transform fitted on the training features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaTransform {
    /// F x n_dim matrix; columns are orthonormal eigenvectors of the
    /// standardized covariance, in descending eigenvalue order.
    basis: DMatrix<f64>,
    means: DVector<f64>,
    /// Per-feature standard deviations; zero-variance columns keep scale 1.
    scales: DVector<f64>,
    eigenvalues: Vec<f64>,
}

impl PcaTransform {
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn means(&self) -> &DVector<f64> {
        &self.means
    }

    pub fn scales(&self) -> &DVector<f64> {
        &self.scales
    }

    /// Eigenvalues retained by the projection, descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn n_dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn n_features(&self) -> usize {
        self.basis.nrows()
    }

    /// Projects a single feature row into the PCA space.
    pub fn project_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_features() {
            return Err(CsgeError::shape("pca input", self.n_features(), x.len()));
        }
        for (col, &v) in x.iter().enumerate() {
            if !v.is_finite() {
                return Err(CsgeError::NonFiniteValue {
                    row: 0,
                    col,
                    context: "pca input",
                });
            }
        }
        let standardized = DVector::from_fn(x.len(), |i, _| (x[i] - self.means[i]) / self.scales[i]);
        let projected = self.basis.transpose() * standardized;
        Ok(projected.iter().copied().collect())
    }

    /// Projects every row of an N x F matrix.
    pub fn project_matrix(&self, features: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(features.nrows(), self.n_dim());
        for n in 0..features.nrows() {
            let row: Vec<f64> = features.row(n).iter().copied().collect();
            let projected = self.project_row(&row)?;
            for (d, v) in projected.iter().enumerate() {
                out[(n, d)] = *v;
            }
        }
        Ok(out)
    }
}

/// Fits the PCA transform: standardize each feature (zero-variance columns
/// get scale 1 and contribute nothing), eigendecompose the covariance, keep
/// the top `n_dim` eigenvectors with a deterministic sign convention.
pub fn fit_pca(features: &DMatrix<f64>, n_dim: usize) -> Result<PcaTransform> {
    let (n, f) = features.shape();
    if n < 2 {
        return Err(CsgeError::DegenerateData(format!(
            "pca needs at least 2 samples, got {n}"
        )));
    }
    if n_dim == 0 || n_dim > f {
        return Err(CsgeError::InvalidHyperParams(format!(
            "n_dim must lie in [1, {f}], got {n_dim}"
        )));
    }

    let means = DVector::from_fn(f, |j, _| features.column(j).sum() / n as f64);
    let scales = DVector::from_fn(f, |j, _| {
        let var = features
            .column(j)
            .iter()
            .map(|v| (v - means[j]) * (v - means[j]))
            .sum::<f64>()
            / (n - 1) as f64;
        if var > 0.0 {
            var.sqrt()
        } else {
            1.0
        }
    });

    let standardized = DMatrix::from_fn(n, f, |i, j| (features[(i, j)] - means[j]) / scales[j]);
    let covariance = standardized.transpose() * &standardized / (n - 1) as f64;

    let eigen = nalgebra::SymmetricEigen::new(covariance);
    let mut order: Vec<usize> = (0..f).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]));

    let mut basis = DMatrix::zeros(f, n_dim);
    let mut eigenvalues = Vec::with_capacity(n_dim);
    for (d, &idx) in order.iter().take(n_dim).enumerate() {
        let mut column: Vec<f64> = eigen.eigenvectors.column(idx).iter().copied().collect();
        // Sign convention: the first component of largest magnitude is positive.
        let mut lead = 0;
        for (i, v) in column.iter().enumerate() {
            if v.abs() > column[lead].abs() {
                lead = i;
            }
        }
        if column[lead] < 0.0 {
            for v in &mut column {
                *v = -*v;
            }
        }
        for (i, v) in column.iter().enumerate() {
            basis[(i, d)] = *v;
        }
        eigenvalues.push(eigen.eigenvalues[idx]);
    }

    Ok(PcaTransform {
        basis,
        means,
        scales,
        eigenvalues,
    })
}

/// Everything the local aspect needs at query time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalMemory {
    pca: PcaTransform,
    /// N x n_dim projection of the training features.
    projected_training: DMatrix<f64>,
    /// N x J per-sample, per-member errors at lead time 0 (out-of-fold).
    training_errors: DMatrix<f64>,
    /// Number of nearest situations consulted per query.
    k_neighbors: usize,
}

impl LocalMemory {
    pub fn new(
        pca: PcaTransform,
        features: &DMatrix<f64>,
        training_errors: DMatrix<f64>,
        k_neighbors: usize,
    ) -> Result<Self> {
        let projected_training = pca.project_matrix(features)?;
        if training_errors.nrows() != projected_training.nrows() {
            return Err(CsgeError::shape(
                "local memory errors",
                projected_training.nrows(),
                training_errors.nrows(),
            ));
        }
        if k_neighbors == 0 || k_neighbors > projected_training.nrows() {
            return Err(CsgeError::InvalidHyperParams(format!(
                "neighbors must lie in [1, {}], got {k_neighbors}",
                projected_training.nrows()
            )));
        }
        Ok(LocalMemory {
            pca,
            projected_training,
            training_errors,
            k_neighbors,
        })
    }

    pub fn pca(&self) -> &PcaTransform {
        &self.pca
    }

    pub fn projected_training(&self) -> &DMatrix<f64> {
        &self.projected_training
    }

    pub fn training_errors(&self) -> &DMatrix<f64> {
        &self.training_errors
    }

    pub fn k_neighbors(&self) -> usize {
        self.k_neighbors
    }

    pub fn n_members(&self) -> usize {
        self.training_errors.ncols()
    }

    pub fn n_samples(&self) -> usize {
        self.projected_training.nrows()
    }
}

/// Indices of the `c` nearest training rows to `projected`, by Euclidean
/// distance; ties at the cut break toward the lowest row index.
fn nearest_rows(memory: &LocalMemory, projected: &[f64]) -> Vec<usize> {
    let n = memory.projected_training.nrows();
    let mut by_distance: Vec<(f64, usize)> = (0..n)
        .map(|row| {
            let d2: f64 = (0..memory.pca.n_dim())
                .map(|d| {
                    let diff = memory.projected_training[(row, d)] - projected[d];
                    diff * diff
                })
                .sum();
            (d2, row)
        })
        .collect();
    by_distance.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    by_distance
        .iter()
        .take(memory.k_neighbors)
        .map(|&(_, row)| row)
        .collect()
}

/// Per-member mean absolute stored error over the `c` training situations
/// nearest to `x` in PCA space.
pub fn local_errors(memory: &LocalMemory, x: &[f64]) -> Result<Vec<f64>> {
    let projected = memory.pca.project_row(x)?;
    let neighbors = nearest_rows(memory, &projected);
    let c = neighbors.len() as f64;
    Ok((0..memory.n_members())
        .map(|j| {
            neighbors
                .iter()
                .map(|&row| memory.training_errors[(row, j)].abs())
                .sum::<f64>()
                / c
        })
        .collect())
}

/// Soft-gates the local error scores into the local weight vector.
pub fn local_weights(q: &[f64], eta_local: f64, cfg: &SoftGateConfig) -> Result<Vec<f64>> {
    soft_gate(q, eta_local, cfg)
}
