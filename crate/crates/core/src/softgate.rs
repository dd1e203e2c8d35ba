//! The soft-gating kernel and the exponent penalty heuristic.
//!
//! Soft gating maps a vector of member errors to a weight vector. The
//! exponent `eta` interpolates between plain averaging (`eta = 0`, every
//! member gets `1/J`) and hard gating (large `eta`, the best member takes
//! all the weight).

use serde::{Deserialize, Serialize};

use crate::error::{CsgeError, Result};
use crate::util::stable_sum;

/// Numeric knobs of the gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SoftGateConfig {
    /// Added to the powered error in the denominator to keep the gate total.
    pub epsilon: f64,
    /// Upper bound for every exponent; caps the optimizer search space.
    pub eta_max: f64,
}

impl Default for SoftGateConfig {
    fn default() -> Self {
        SoftGateConfig {
            epsilon: 1e-9,
            eta_max: 12.0,
        }
    }
}

impl SoftGateConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return Err(CsgeError::InvalidHyperParams(format!(
                "epsilon must be a positive real, got {}",
                self.epsilon
            )));
        }
        if !self.eta_max.is_finite() || self.eta_max <= 0.0 {
            return Err(CsgeError::InvalidHyperParams(format!(
                "eta_max must be a positive real, got {}",
                self.eta_max
            )));
        }
        Ok(())
    }
}

fn check_inputs(errors: &[f64], eta: f64, cfg: &SoftGateConfig) -> Result<()> {
    if errors.is_empty() {
        return Err(CsgeError::shape("soft gate errors", "J >= 1", 0));
    }
    for (index, &value) in errors.iter().enumerate() {
        if !value.is_finite() {
            return Err(CsgeError::NonFiniteValue {
                row: 0,
                col: index,
                context: "soft gate errors",
            });
        }
        if value < 0.0 {
            return Err(CsgeError::NegativeError { index, value });
        }
    }
    if !eta.is_finite() || eta < 0.0 || eta > cfg.eta_max {
        return Err(CsgeError::EtaOutOfRange {
            value: eta,
            max: cfg.eta_max,
        });
    }
    Ok(())
}

/// Unnormalized gate for member `j`: `sum(errors) / (errors[j]^eta + epsilon)`.
pub fn soft_gate_raw(errors: &[f64], j: usize, eta: f64, cfg: &SoftGateConfig) -> Result<f64> {
    check_inputs(errors, eta, cfg)?;
    if j >= errors.len() {
        return Err(CsgeError::shape(
            "soft gate member index",
            format!("< {}", errors.len()),
            j,
        ));
    }
    let total = stable_sum(errors);
    Ok(total / (errors[j].powf(eta) + cfg.epsilon))
}

fn raw_gates(errors: &[f64], eta: f64, epsilon: f64) -> Vec<f64> {
    let total = stable_sum(errors);
    errors
        .iter()
        .map(|e| total / (e.powf(eta) + epsilon))
        .collect()
}

/// Normalized soft-gate weights: smaller error, larger weight; sums to 1.
///
/// Degenerate inputs are total: an all-zero error vector yields the uniform
/// weighting, and an overflowing `errors[j]^eta` is rescued by rescaling the
/// errors (the gate is scale-free up to epsilon effects).
pub fn soft_gate(errors: &[f64], eta: f64, cfg: &SoftGateConfig) -> Result<Vec<f64>> {
    check_inputs(errors, eta, cfg)?;
    let j = errors.len();
    let uniform = vec![1.0 / j as f64; j];
    let max_error = errors.iter().cloned().fold(0.0_f64, f64::max);
    if max_error == 0.0 {
        // All raw gates are 0/epsilon = 0; normalization is defined as uniform.
        return Ok(uniform);
    }

    let mut raws = raw_gates(errors, eta, cfg.epsilon);
    let mut total = stable_sum(&raws);
    if !total.is_finite() || total <= 0.0 {
        // errors[j]^eta or sum(errors) left the f64 range; rescale by the max.
        let scaled: Vec<f64> = errors.iter().map(|e| e / max_error).collect();
        raws = raw_gates(&scaled, eta, cfg.epsilon);
        total = stable_sum(&raws);
    }
    if !total.is_finite() || total <= 0.0 {
        return Ok(uniform);
    }
    Ok(raws.iter().map(|r| r / total).collect())
}

/// Regularization heuristic `a(eta)`: penalizes disabling an aspect
/// (`eta = 0`) as well as driving it into pure gating (large `eta`).
pub fn eta_penalty(eta: f64) -> Result<f64> {
    if !eta.is_finite() || eta < 0.0 {
        return Err(CsgeError::EtaOutOfRange {
            value: eta,
            max: f64::INFINITY,
        });
    }
    Ok(1.0 / (1.0 + (-0.5 * (eta - 10.0)).exp()) + 1.0 / (2.0 * (1.0 + eta.sqrt().exp())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> SoftGateConfig {
        SoftGateConfig::default()
    }

    #[test]
    fn raw_gate_direct_evaluations() {
        assert!((soft_gate_raw(&[2.0, 2.0], 0, 1.0, &cfg()).unwrap() - 2.0).abs() < 1e-6);
        // eta = 0 makes the denominator 1 + epsilon
        assert!((soft_gate_raw(&[1.0, 3.0], 0, 0.0, &cfg()).unwrap() - 4.0).abs() < 1e-6);
        assert!(
            (soft_gate_raw(&[1.0, 3.0], 1, 2.0, &cfg()).unwrap() - 4.0 / 9.0).abs() < 1e-6
        );
    }

    #[test]
    fn raw_gate_rejects_bad_inputs() {
        assert!(matches!(
            soft_gate_raw(&[1.0, -0.5], 0, 1.0, &cfg()),
            Err(CsgeError::NegativeError { index: 1, .. })
        ));
        assert!(matches!(
            soft_gate_raw(&[1.0, 2.0], 0, 13.0, &cfg()),
            Err(CsgeError::EtaOutOfRange { .. })
        ));
        assert!(soft_gate_raw(&[1.0, f64::NAN], 0, 1.0, &cfg()).is_err());
        assert!(soft_gate_raw(&[1.0, 2.0], 2, 1.0, &cfg()).is_err());
    }

    #[test]
    fn gate_known_values() {
        let w = soft_gate(&[1.0, 3.0], 0.0, &cfg()).unwrap();
        assert!((w[0] - 0.5).abs() < 1e-9 && (w[1] - 0.5).abs() < 1e-9);

        let w = soft_gate(&[1.0, 3.0], 1.0, &cfg()).unwrap();
        assert!((w[0] - 0.75).abs() < 1e-9 && (w[1] - 0.25).abs() < 1e-9);

        let w = soft_gate(&[1.0, 2.0, 4.0], 1.0, &cfg()).unwrap();
        assert!((w[0] - 0.5714).abs() < 1e-3);
        assert!((w[1] - 0.2857).abs() < 1e-3);
        assert!((w[2] - 0.1429).abs() < 1e-3);

        let w = soft_gate(&[1.0, 3.0], 2.0, &cfg()).unwrap();
        assert!((w[0] - 0.9).abs() < 1e-9 && (w[1] - 0.1).abs() < 1e-9);
    }

    #[test]
    fn gate_limit_is_winner_take_all() {
        let cfg = SoftGateConfig {
            eta_max: 50.0,
            ..Default::default()
        };
        let w = soft_gate(&[1.0, 3.0], 50.0, &cfg).unwrap();
        assert!(w[0] >= 1.0 - 1e-8);
    }

    #[test]
    fn all_zero_errors_gate_uniformly() {
        let w = soft_gate(&[0.0, 0.0, 0.0], 3.0, &cfg()).unwrap();
        for v in w {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn overflowing_power_is_rescued_by_rescaling() {
        let w = soft_gate(&[1e300, 1e300, 1.0], 12.0, &cfg()).unwrap();
        assert!(w.iter().all(|v| v.is_finite()));
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(w[2] > w[0]);
    }

    #[test]
    fn single_member_gets_full_weight() {
        assert_eq!(soft_gate(&[7.0], 2.0, &cfg()).unwrap(), vec![1.0]);
    }

    #[test]
    fn penalty_known_values() {
        assert!((eta_penalty(0.0).unwrap() - 0.2567).abs() < 1e-3);
        assert!((eta_penalty(10.0).unwrap() - 0.5203).abs() < 1e-3);
        assert!((eta_penalty(4.0).unwrap() - 0.1070).abs() < 1e-3);
        assert!(eta_penalty(-0.1).is_err());
    }

    proptest! {
        #[test]
        fn gate_sums_to_one(
            errors in proptest::collection::vec(0.0f64..1e4, 1..=50),
            eta in 0.0f64..=12.0,
        ) {
            let w = soft_gate(&errors, eta, &cfg()).unwrap();
            let sum: f64 = w.iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12);
            prop_assert!(w.iter().all(|v| (0.0..=1.0 + 1e-12).contains(v)));
        }

        #[test]
        fn gate_is_monotone_in_errors(
            errors in proptest::collection::vec(0.0f64..1e4, 2..=10),
            eta in 0.0f64..=12.0,
        ) {
            let w = soft_gate(&errors, eta, &cfg()).unwrap();
            for a in 0..errors.len() {
                for b in 0..errors.len() {
                    if errors[a] < errors[b] {
                        prop_assert!(w[a] >= w[b] - 1e-15);
                    }
                }
            }
        }

        #[test]
        fn eta_zero_is_uniform(errors in proptest::collection::vec(0.0f64..1e4, 1..=50)) {
            let w = soft_gate(&errors, 0.0, &cfg()).unwrap();
            let uniform = 1.0 / errors.len() as f64;
            for v in w {
                prop_assert!((v - uniform).abs() <= 1e-9);
            }
        }

        #[test]
        fn gate_is_scale_free(
            errors in proptest::collection::vec(1e-3f64..1e3, 2..=8),
            eta in 0.0f64..=1.0,
            scale in prop_oneof![Just(0.5), Just(3.0), Just(10.0)],
        ) {
            let base = soft_gate(&errors, eta, &cfg()).unwrap();
            let scaled_errors: Vec<f64> = errors.iter().map(|e| e * scale).collect();
            let scaled = soft_gate(&scaled_errors, eta, &cfg()).unwrap();
            for (a, b) in base.iter().zip(&scaled) {
                prop_assert!((a - b).abs() <= 1e-6);
            }
        }

        #[test]
        fn penalty_is_nonnegative(eta in 0.0f64..=100.0) {
            prop_assert!(eta_penalty(eta).unwrap() >= 0.0);
        }
    }
}
