//! The learned exponents and the per-prediction weight record.

use serde::{Deserialize, Serialize};

use crate::error::{CsgeError, Result};
use crate::util::stable_sum;

/// The three soft-gating exponents, one per weighting aspect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaVector {
    pub global: f64,
    pub local: f64,
    pub time: f64,
}

impl EtaVector {
    pub fn new(global: f64, local: f64, time: f64) -> Self {
        EtaVector { global, local, time }
    }

    pub fn zero() -> Self {
        EtaVector::new(0.0, 0.0, 0.0)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.global, self.local, self.time]
    }

    pub fn from_array(values: [f64; 3]) -> Self {
        EtaVector::new(values[0], values[1], values[2])
    }

    /// Each exponent must be finite and inside `[0, eta_max]`.
    pub fn validate(&self, eta_max: f64) -> Result<()> {
        for value in self.as_array() {
            if !value.is_finite() || value < 0.0 || value > eta_max {
                return Err(CsgeError::EtaOutOfRange {
                    value,
                    max: eta_max,
                });
            }
        }
        Ok(())
    }
}

/// Weights of a single ensemble member inside a [`WeightBreakdown`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemberWeights {
    pub global: f64,
    pub local: f64,
    pub time: f64,
    /// Normalized product of the three aspects; sums to 1 over members.
    pub combined: f64,
}

/// Per-prediction record of every weighting aspect for every member.
///
/// This is the interpretability artifact: it shows how much each member
/// contributed to a fused prediction and through which aspect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightBreakdown {
    members: Vec<MemberWeights>,
}

impl WeightBreakdown {
    /// Multiplies the three aspect weights per member and normalizes the
    /// products so they sum to 1.
    pub fn combine(global: &[f64], local: &[f64], time: &[f64]) -> Result<Self> {
        let j = global.len();
        if local.len() != j || time.len() != j {
            return Err(CsgeError::shape(
                "weight aspects",
                j,
                format!("{} / {}", local.len(), time.len()),
            ));
        }
        if j == 0 {
            return Err(CsgeError::shape("weight aspects", "J >= 1", 0));
        }
        let products: Vec<f64> = (0..j).map(|i| global[i] * local[i] * time[i]).collect();
        let total = stable_sum(&products);
        // Aspect weights are strictly positive, so total == 0 only through
        // underflow of the triple product; fall back to uniform then.
        let combined: Vec<f64> = if total > 0.0 && total.is_finite() {
            products.iter().map(|p| p / total).collect()
        } else {
            vec![1.0 / j as f64; j]
        };
        Ok(WeightBreakdown {
            members: (0..j)
                .map(|i| MemberWeights {
                    global: global[i],
                    local: local[i],
                    time: time[i],
                    combined: combined[i],
                })
                .collect(),
        })
    }

    pub fn members(&self) -> &[MemberWeights] {
        &self.members
    }

    pub fn n_members(&self) -> usize {
        self.members.len()
    }

    /// The final fusion weights, in member order.
    pub fn combined(&self) -> Vec<f64> {
        self.members.iter().map(|m| m.combined).collect()
    }

    /// Checks the normalization and range invariants at the given tolerance.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        let combined = self.combined();
        let sum = stable_sum(&combined);
        if (sum - 1.0).abs() > tol {
            return Err(CsgeError::DegenerateData(format!(
                "combined weights sum to {sum}, expected 1"
            )));
        }
        for m in &self.members {
            for w in [m.global, m.local, m.time, m.combined] {
                if !(0.0..=1.0 + tol).contains(&w) {
                    return Err(CsgeError::DegenerateData(format!(
                        "weight {w} outside [0, 1]"
                    )));
                }
            }
        }
        Ok(())
    }
}
