//! The out-of-fold prediction tensor.

use serde::{Deserialize, Serialize};

use crate::error::{CsgeError, Result};

/// N x J x T tensor of member predictions, one value per sample, member, and
/// lead time (T = 1 for non-temporal tasks).
///
/// For classification the stored value is the predicted class index; the
/// accompanying per-class probabilities live in a [`ClassProbCube`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionCube {
    values: Vec<f64>,
    n_samples: usize,
    n_members: usize,
    horizon: usize,
    member_ids: Vec<String>,
}

impl PredictionCube {
    pub fn new(
        values: Vec<f64>,
        n_samples: usize,
        horizon: usize,
        member_ids: Vec<String>,
    ) -> Result<Self> {
        let n_members = member_ids.len();
        if n_members < 2 {
            return Err(CsgeError::InvalidHyperParams(format!(
                "an ensemble needs at least 2 members, got {n_members}"
            )));
        }
        if values.len() != n_samples * n_members * horizon {
            return Err(CsgeError::shape(
                "prediction cube",
                n_samples * n_members * horizon,
                values.len(),
            ));
        }
        if n_samples == 0 || horizon == 0 {
            return Err(CsgeError::shape(
                "prediction cube",
                "N >= 1 and T >= 1",
                format!("N = {n_samples}, T = {horizon}"),
            ));
        }
        let cube = PredictionCube {
            values,
            n_samples,
            n_members,
            horizon,
            member_ids,
        };
        for n in 0..n_samples {
            for j in 0..n_members {
                for t in 0..horizon {
                    if !cube.get(n, j, t).is_finite() {
                        return Err(CsgeError::NonFiniteValue {
                            row: n,
                            col: j * horizon + t,
                            context: "prediction cube",
                        });
                    }
                }
            }
        }
        Ok(cube)
    }

    /// Builds the cube by evaluating `f(n, j, t)` over the full index range.
    pub fn from_fn(
        n_samples: usize,
        horizon: usize,
        member_ids: Vec<String>,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let n_members = member_ids.len();
        let mut values = vec![0.0; n_samples * n_members * horizon];
        for n in 0..n_samples {
            for j in 0..n_members {
                for t in 0..horizon {
                    values[(n * n_members + j) * horizon + t] = f(n, j, t);
                }
            }
        }
        PredictionCube::new(values, n_samples, horizon, member_ids)
    }

    #[inline]
    pub fn get(&self, n: usize, j: usize, t: usize) -> f64 {
        self.values[(n * self.n_members + j) * self.horizon + t]
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_members(&self) -> usize {
        self.n_members
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn member_ids(&self) -> &[String] {
        &self.member_ids
    }

    /// Member predictions for one sample at one lead time, in member order.
    pub fn member_row(&self, n: usize, t: usize) -> Vec<f64> {
        (0..self.n_members).map(|j| self.get(n, j, t)).collect()
    }

    /// Returns a copy with the member axis permuted: member `j` of the output
    /// is member `perm[j]` of the input.
    pub fn permute_members(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n_members {
            return Err(CsgeError::shape("member permutation", self.n_members, perm.len()));
        }
        let ids = perm.iter().map(|&j| self.member_ids[j].clone()).collect();
        PredictionCube::from_fn(self.n_samples, self.horizon, ids, |n, j, t| {
            self.get(n, perm[j], t)
        })
    }
}

/// N x J x K per-class probabilities for classification ensembles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassProbCube {
    values: Vec<f64>,
    n_samples: usize,
    n_members: usize,
    n_classes: usize,
}

impl ClassProbCube {
    pub fn from_fn(
        n_samples: usize,
        n_members: usize,
        n_classes: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut values = vec![0.0; n_samples * n_members * n_classes];
        for n in 0..n_samples {
            for j in 0..n_members {
                for k in 0..n_classes {
                    let v = f(n, j, k);
                    if !v.is_finite() || v < 0.0 {
                        return Err(CsgeError::NonFiniteValue {
                            row: n,
                            col: j * n_classes + k,
                            context: "class probability cube",
                        });
                    }
                    values[(n * n_members + j) * n_classes + k] = v;
                }
            }
        }
        Ok(ClassProbCube {
            values,
            n_samples,
            n_members,
            n_classes,
        })
    }

    #[inline]
    pub fn get(&self, n: usize, j: usize, k: usize) -> f64 {
        self.values[(n * self.n_members + j) * self.n_classes + k]
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_members(&self) -> usize {
        self.n_members
    }
}
